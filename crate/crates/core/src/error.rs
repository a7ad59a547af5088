use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument or parameter lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("root solver failed: {0}")]
    SolverFailure(String),

    /// The adaptive rule could not reach its relative-error target.
    #[error(
        "quadrature did not converge: estimate {estimate:e}, relative error {relative_error:e} \
         after {refinements} refinements (target {tolerance:e})"
    )]
    QuadratureFailure {
        estimate: f64,
        relative_error: f64,
        refinements: u32,
        tolerance: f64,
    },

    /// The ISA/I0 and R0/1 formulations of the threshold disagree.
    #[error("inconsistent threshold verdict: {0}")]
    InconsistentResult(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
