//! Weibull law of the infective age at death, parameterized by its median.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default integration horizon in years.
pub const DEFAULT_OMEGA: f64 = 40.0;
/// Largest survival mass allowed beyond the integration horizon.
pub const MAX_TAIL_MASS: f64 = 1e-6;

/// Weibull scale `me * ln(2)^(-1/shape)` that puts the median at `median`.
pub fn weibull_scale(median: f64, shape: f64) -> Result<f64> {
    if !(median > 0.0 && median.is_finite() && shape > 0.0 && shape.is_finite()) {
        return Err(Error::domain(format!(
            "Weibull median and shape must be positive, got median = {median}, shape = {shape}"
        )));
    }
    Ok(median * std::f64::consts::LN_2.powf(-1.0 / shape))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalParams {
    median: f64,
    shape: f64,
    scale: f64,
}

impl SurvivalParams {
    pub const BASELINE_SHAPE: f64 = 2.5;
    pub const BASELINE_MEDIAN_FEMALE: f64 = 8.6;
    pub const BASELINE_MEDIAN_MALE: f64 = 9.4;

    pub fn new(median: f64, shape: f64) -> Result<Self> {
        let scale = weibull_scale(median, shape)?;
        Ok(Self {
            median,
            shape,
            scale,
        })
    }

    pub fn median(&self) -> f64 {
        self.median
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Probability of surviving past `x`.
    pub fn tail_mass(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        (-(x / self.scale).powf(self.shape)).exp()
    }

    /// Checks that the horizon `omega` leaves less than [`MAX_TAIL_MASS`]
    /// of the distribution untouched.
    pub fn check_horizon(&self, omega: f64) -> Result<()> {
        let tail = self.tail_mass(omega);
        if !(omega > 0.0) || tail >= MAX_TAIL_MASS {
            return Err(Error::domain(format!(
                "horizon omega = {omega} leaves survival tail mass {tail:e} >= {MAX_TAIL_MASS:e}"
            )));
        }
        Ok(())
    }
}

pub fn survival_density(x: f64, p: &SurvivalParams) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match p.shape {
            s if s < 1.0 => f64::INFINITY,
            1.0 => 1.0 / p.scale,
            _ => 0.0,
        };
    }
    let z = x / p.scale;
    let zk1 = z.powf(p.shape - 1.0);
    p.shape / p.scale * zk1 * (-zk1 * z).exp()
}

pub fn survival_cdf(x: f64, p: &SurvivalParams) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    -(-(x / p.scale).powf(p.shape)).exp_m1()
}

/// Inverse CDF. `u` must lie in `[0, 1)`.
pub fn survival_quantile(u: f64, p: &SurvivalParams) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::domain(format!(
            "quantile level must lie in [0, 1), got {u}"
        )));
    }
    Ok(p.scale * (-(-u).ln_1p()).powf(1.0 / p.shape))
}
