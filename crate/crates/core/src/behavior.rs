//! Sexual activity over the course of infection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::natural_history::check_ages;

/// Baseline act rate and its decline before death.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityParams {
    /// Annual number of coital acts with different partners at infection.
    pub delta: f64,
    /// Fraction of activity remaining `tau1` years before death.
    pub phi: f64,
    /// Same `tau1` as the viral-load trajectory.
    pub tau1: f64,
}

impl ActivityParams {
    pub const BASELINE_PHI: f64 = 0.61;

    pub fn new(delta: f64, phi: f64, tau1: f64) -> Result<Self> {
        let p = Self { delta, phi, tau1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::domain(format!(
                "delta must be finite and >= 0, got {}",
                self.delta
            )));
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(Error::domain(format!(
                "phi must lie in (0, 1), got {}",
                self.phi
            )));
        }
        if !(self.tau1 > 0.0 && self.tau1.is_finite()) {
            return Err(Error::domain(format!(
                "tau1 must be > 0, got {}",
                self.tau1
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn fraction_unchecked(&self, ia: f64, iad: f64) -> f64 {
        if iad <= self.tau1 {
            return 0.0;
        }
        let num = 1.0 - ia / iad;
        let den = 1.0 + ia * (self.tau1 - self.phi * iad) / (iad * self.phi * (iad - self.tau1));
        num / den
    }
}

/// Fraction `G(ia, iad)` of baseline activity remaining.
///
/// Equal to 1 at infection, `phi` at `iad - tau1` and 0 at death; zero
/// throughout when `iad <= tau1`.
pub fn activity_fraction(ia: f64, iad: f64, p: &ActivityParams) -> Result<f64> {
    check_ages(ia, iad)?;
    Ok(p.fraction_unchecked(ia, iad))
}

/// Annualized coital acts `NCA = delta * G`.
pub fn coital_rate(ia: f64, iad: f64, p: &ActivityParams) -> Result<f64> {
    Ok(p.delta * activity_fraction(ia, iad, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ActivityParams {
        ActivityParams::new(208.0, 0.61, 1.0).unwrap()
    }

    #[test]
    fn phi_one_year_before_death() {
        let p = base();
        for (ia, iad) in [(0.1, 1.1), (2.0, 3.0), (4.0, 5.0)] {
            assert!((activity_fraction(ia, iad, &p).unwrap() - 0.61).abs() < 1e-12);
        }
    }

    #[test]
    fn anchor_identities() {
        let p = base();
        for iad in [1.1, 3.0, 5.0, 10.0, 20.0] {
            assert_eq!(activity_fraction(0.0, iad, &p).unwrap(), 1.0);
            assert!((activity_fraction(iad - 1.0, iad, &p).unwrap() - p.phi).abs() < 1e-12);
            assert_eq!(activity_fraction(iad, iad, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn short_infection_is_inactive() {
        let p = base();
        for ia in [0.0, 0.3, 0.8] {
            assert_eq!(activity_fraction(ia, 0.8, &p).unwrap(), 0.0);
        }
        assert_eq!(activity_fraction(0.0, 1.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn coital_rate_anchors() {
        let p = base();
        assert_eq!(coital_rate(0.0, 7.0, &p).unwrap(), 208.0);
        assert!((coital_rate(6.0, 7.0, &p).unwrap() - 126.88).abs() < 1e-9);
        assert_eq!(coital_rate(7.0, 7.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn bounded_monotone_positive_denominator() {
        let p = base();
        let mut iad = 1.0 + 1e-3;
        while iad <= 40.0 {
            let mut prev = f64::INFINITY;
            for j in 0..=400 {
                let ia = (iad * j as f64 / 400.0).min(iad);
                let den = 1.0 + ia * (p.tau1 - p.phi * iad) / (iad * p.phi * (iad - p.tau1));
                assert!(den > 0.0);
                let g = activity_fraction(ia, iad, &p).unwrap();
                assert!((0.0..=1.0).contains(&g), "G({ia}, {iad}) = {g}");
                assert!(g <= prev + 1e-15);
                prev = g;
            }
            iad += 0.173;
        }
    }

    #[test]
    fn domain_errors() {
        let p = base();
        assert!(activity_fraction(3.0, 2.0, &p).is_err());
        assert!(activity_fraction(-1.0, 2.0, &p).is_err());
        assert!(ActivityParams::new(-1.0, 0.61, 1.0).is_err());
        assert!(ActivityParams::new(10.0, 1.0, 1.0).is_err());
        assert!(ActivityParams::new(10.0, 0.5, 0.0).is_err());
    }
}
