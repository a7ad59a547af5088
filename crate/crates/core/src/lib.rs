//! Two-sex basic reproduction number for heterosexual HIV transmission.
//!
//! The crate evaluates closed-form models of viral load, per-act
//! transmission probability, sexual activity and survival, integrates them
//! into sex-specific reproduction numbers, and answers the threshold
//! question `ISA > I0`. A Monte Carlo branching simulation in
//! [`mc_oracle`] provides an independent check of the quadrature.

// `!(x > 0.0)` deliberately rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod behavior;
pub mod cli;
pub mod config;
pub mod error;
pub mod mc_oracle;
pub mod natural_history;
pub mod output;
pub mod quadrature;
pub mod reproduction;
pub mod roots;
pub mod survival;

pub use error::{Error, Result};
