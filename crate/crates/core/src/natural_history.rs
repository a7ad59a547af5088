//! Log viral-load trajectory and per-act transmission probability.
//!
//! The trajectory `LVl(ia, iad)` blends a first-peak curve (a gamma-like
//! bump `h1` evaluated on a logistic time warp `h2`) with a Gaussian
//! pre-death bump `h3` that forces the value to `M2` exactly `tau1` years
//! before death. The transmission probability is a complementary log-log
//! function of the viral load `10^LVl`, calibrated by its values at the
//! first-peak height and at the asymptomatic plateau.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

/// Shape parameters of the log10 viral-load trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViralLoadParams {
    /// Infective age of the first peak, in years.
    pub ia1: f64,
    /// Height of the first peak (log10 copies/mL).
    pub peak1: f64,
    /// Asymptomatic plateau (log10 copies/mL).
    pub plateau: f64,
    /// Time before death of the second peak, in years.
    pub tau1: f64,
    /// Height of the second peak (log10 copies/mL).
    pub peak2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl Default for ViralLoadParams {
    fn default() -> Self {
        Self {
            ia1: 0.4,
            peak1: 5.0,
            plateau: 3.0,
            tau1: 1.0,
            peak2: 4.8,
            alpha1: 1.3,
            alpha2: 0.2,
            alpha3: 0.7,
        }
    }
}

impl ViralLoadParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.ia1,
            self.peak1,
            self.plateau,
            self.tau1,
            self.peak2,
            self.alpha1,
            self.alpha2,
            self.alpha3,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("viral-load parameters must be finite"));
        }
        if !(self.ia1 > 0.0) {
            return Err(Error::domain(format!("ia1 must be > 0, got {}", self.ia1)));
        }
        if !(self.tau1 > 0.0) {
            return Err(Error::domain(format!(
                "tau1 must be > 0, got {}",
                self.tau1
            )));
        }
        if !(self.alpha1 > 1.0) {
            return Err(Error::domain(format!(
                "alpha1 must be > 1, got {}",
                self.alpha1
            )));
        }
        if !(self.alpha3 > 0.0) {
            return Err(Error::domain(format!(
                "alpha3 must be > 0, got {}",
                self.alpha3
            )));
        }
        if !(self.plateau > 0.0 && self.peak1 > self.plateau) {
            return Err(Error::domain(format!(
                "need M1 > m > 0, got M1 = {}, m = {}",
                self.peak1, self.plateau
            )));
        }
        if !(self.peak2 > self.plateau) {
            return Err(Error::domain(format!(
                "need M2 > m, got M2 = {}, m = {}",
                self.peak2, self.plateau
            )));
        }
        Ok(())
    }

    /// Upper bound of `LVl` over its whole domain.
    pub fn max_log_load(&self) -> f64 {
        self.peak1.max(self.peak2)
    }
}

/// Largest root of `h1(x) = m`; the warp `h2` saturates at this value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct XStar(f64);

impl XStar {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Wraps a known value without solving. Must be positive.
    pub fn from_value(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!("x* must be positive, got {value}")))
        }
    }
}

/// Absolute tolerance of the x* solve.
pub const XSTAR_TOLERANCE: f64 = 1e-10;
const XSTAR_INITIAL_BOUND: f64 = 10.0;
const XSTAR_BOUND_CAP: f64 = 1e6;

/// First-peak curve. Maximal, equal to `M1`, at `x = ia1`; zero at the origin.
pub fn h1_eval(x: f64, p: &ViralLoadParams) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let r = x / p.ia1;
    // r^(a-1) exp((1-a)(r-1)) folded into one exponential
    p.peak1 * ((p.alpha1 - 1.0) * (r.ln() - r + 1.0)).exp()
}

/// Solves for the largest root of `h1(x) = m`.
///
/// `h1` is strictly decreasing right of `ia1`, so the bracket `[ia1, B]`
/// holds exactly one root once `B` is doubled past the sign change.
pub fn solve_xstar(p: &ViralLoadParams) -> Result<XStar> {
    if !(p.plateau < p.peak1) {
        return Err(Error::NoRoot(format!(
            "h1 never returns to m = {} because m >= M1 = {}",
            p.plateau, p.peak1
        )));
    }
    let f = |x: f64| h1_eval(x, p) - p.plateau;
    let hi = roots::expand_right(f, p.ia1, XSTAR_INITIAL_BOUND, XSTAR_BOUND_CAP)?;
    let x = roots::bisect(f, p.ia1, hi, XSTAR_TOLERANCE)?;
    Ok(XStar(x))
}

/// Logistic time warp: 0 at infection, increasing to `x*` as `ia` grows.
pub fn h2_eval(ia: f64, alpha2: f64, xstar: XStar) -> f64 {
    Warp::new(alpha2, xstar).eval(ia)
}

/// [`h2_eval`] with its `ia`-independent factors computed once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Warp {
    alpha2: f64,
    xs: f64,
    one_plus_e: f64,
    scale: f64,
    offset: f64,
}

impl Warp {
    pub(crate) fn new(alpha2: f64, xstar: XStar) -> Self {
        let xs = xstar.0;
        let e = alpha2.exp();
        Self {
            alpha2,
            xs,
            one_plus_e: 1.0 + e,
            scale: xs * (1.0 + (-alpha2).exp()),
            offset: 1.0 / (1.0 + e),
        }
    }

    #[inline]
    pub(crate) fn eval(&self, ia: f64) -> f64 {
        let logistic = 1.0 / (1.0 + (self.alpha2 - ia * self.one_plus_e / self.xs).exp());
        self.scale * (logistic - self.offset)
    }
}

/// Gaussian pre-death bump, equal to 1 at `ia = iad - tau1`.
pub fn h3_eval(ia: f64, iad: f64, alpha3: f64, tau1: f64) -> f64 {
    let d = ia - iad + tau1;
    (-alpha3 * d * d).exp()
}

#[inline]
pub(crate) fn log_viral_load_unchecked(ia: f64, iad: f64, p: &ViralLoadParams, warp: &Warp) -> f64 {
    let base = h1_eval(warp.eval(ia), p);
    base + (p.peak2 - base) * h3_eval(ia, iad, p.alpha3, p.tau1)
}

pub(crate) fn check_ages(ia: f64, iad: f64) -> Result<()> {
    if !(ia >= 0.0 && iad >= 0.0) || !ia.is_finite() || !iad.is_finite() {
        return Err(Error::domain(format!(
            "infective ages must be finite and non-negative, got ia = {ia}, iad = {iad}"
        )));
    }
    if ia > iad {
        return Err(Error::domain(format!(
            "infective age {ia} exceeds infective age at death {iad}"
        )));
    }
    Ok(())
}

/// log10 viral load at infective age `ia` for a person who dies at `iad`.
pub fn log_viral_load(ia: f64, iad: f64, p: &ViralLoadParams, xs: XStar) -> Result<f64> {
    check_ages(ia, iad)?;
    Ok(log_viral_load_unchecked(
        ia,
        iad,
        p,
        &Warp::new(p.alpha2, xs),
    ))
}

/// Complementary log-log coefficients `(kappa0, kappa1)` such that the
/// probability equals `ptr_hi` at viral load `10^M1` and `ptr_lo` at `10^m`.
pub fn derive_kappas(ptr_hi: f64, ptr_lo: f64, peak1: f64, plateau: f64) -> Result<(f64, f64)> {
    if !(ptr_lo > 0.0 && ptr_lo <= ptr_hi && ptr_hi < 1.0) {
        return Err(Error::domain(format!(
            "need 0 < ptr_lo <= ptr_hi < 1, got ptr_lo = {ptr_lo}, ptr_hi = {ptr_hi}"
        )));
    }
    if !(peak1 > plateau) || !peak1.is_finite() || !plateau.is_finite() {
        return Err(Error::domain(format!(
            "need M1 > m, got M1 = {peak1}, m = {plateau}"
        )));
    }
    // ln(1 - p) < 0 for both, so the ratio lies in (0, 1].
    let log_lo = (-ptr_lo).ln_1p();
    let log_hi = (-ptr_hi).ln_1p();
    let ratio_log = (log_lo / log_hi).ln();
    let kappa1 = if ratio_log == 0.0 {
        0.0
    } else {
        ratio_log / (10f64.powf(plateau) - 10f64.powf(peak1))
    };
    let kappa0 = ratio_log / (10f64.powf(peak1 - plateau) - 1.0) + (-log_lo).ln();
    Ok((kappa0, kappa1))
}

/// Anchors and derived coefficients of the transmission probability.
///
/// `scale` multiplies the probability pointwise; it is 1 except in
/// sensitivity runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionParams {
    ptr_hi: f64,
    ptr_lo: f64,
    peak1: f64,
    plateau: f64,
    kappa0: f64,
    kappa1: f64,
    scale: f64,
}

impl TransmissionParams {
    pub const BASELINE_PTR_HI: f64 = 0.008;
    pub const BASELINE_PTR_LO: f64 = 0.001;

    pub fn new(ptr_hi: f64, ptr_lo: f64, viral: &ViralLoadParams) -> Result<Self> {
        let (kappa0, kappa1) = derive_kappas(ptr_hi, ptr_lo, viral.peak1, viral.plateau)?;
        Ok(Self {
            ptr_hi,
            ptr_lo,
            peak1: viral.peak1,
            plateau: viral.plateau,
            kappa0,
            kappa1,
            scale: 1.0,
        })
    }

    pub fn baseline(viral: &ViralLoadParams) -> Result<Self> {
        Self::new(Self::BASELINE_PTR_HI, Self::BASELINE_PTR_LO, viral)
    }

    pub fn ptr_hi(&self) -> f64 {
        self.ptr_hi
    }

    pub fn ptr_lo(&self) -> f64 {
        self.ptr_lo
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub(crate) fn anchored_to(&self, viral: &ViralLoadParams) -> bool {
        self.peak1 == viral.peak1 && self.plateau == viral.plateau
    }

    /// Multiplies the whole probability function by `factor`.
    ///
    /// Fails if the scaled probability could reach 1 anywhere on the
    /// trajectory, whose log load never exceeds `max_log_load`.
    pub fn scaled(&self, factor: f64, max_log_load: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::domain(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let scaled = Self {
            scale: self.scale * factor,
            ..*self
        };
        let peak = scaled.prob_at_log_load(max_log_load);
        if !(peak < 1.0) {
            return Err(Error::domain(format!(
                "scaling by {factor} pushes the transmission probability to {peak} >= 1"
            )));
        }
        Ok(scaled)
    }

    /// Rescales both anchors by `factor` and re-derives the coefficients.
    pub fn rescaled_anchors(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::domain(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let hi = self.ptr_hi * factor;
        let lo = self.ptr_lo * factor;
        if !(hi < 1.0) {
            return Err(Error::domain(format!(
                "scaling by {factor} pushes ptr_hi to {hi} >= 1"
            )));
        }
        let (kappa0, kappa1) = derive_kappas(hi, lo, self.peak1, self.plateau)?;
        Ok(Self {
            ptr_hi: hi,
            ptr_lo: lo,
            kappa0,
            kappa1,
            ..*self
        })
    }

    /// Probability per act at log10 viral load `lvl`.
    #[inline]
    pub fn prob_at_log_load(&self, lvl: f64) -> f64 {
        let hazard = (self.kappa0 + self.kappa1 * (lvl * std::f64::consts::LN_10).exp()).exp();
        -self.scale * (-hazard).exp_m1()
    }
}

/// Per-act transmission probability at infective age `ia` for a person
/// who dies at `iad`.
pub fn transmission_prob(
    ia: f64,
    iad: f64,
    vp: &ViralLoadParams,
    tp: &TransmissionParams,
    xs: XStar,
) -> Result<f64> {
    let lvl = log_viral_load(ia, iad, vp, xs)?;
    Ok(tp.prob_at_log_load(lvl))
}
