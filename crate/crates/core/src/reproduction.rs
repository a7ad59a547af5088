//! Sex-specific and composite basic reproduction numbers and the
//! threshold `ISA > I0`.
//!
//! For one sex the expected number of infections per unit of baseline
//! activity is
//!
//! ```text
//! J = int_0^omega s(y) int_0^y G(x, y) ptr(x, y) dx dy
//! ```
//!
//! so that `R = delta * J`. With `R_fm = delta_f J_f` and
//! `R_mf = delta_m J_m` the dominant eigenvalue of the anti-diagonal
//! next-generation matrix is `R0 = sqrt(R_fm R_mf)`, and `R0 > 1` exactly
//! when `ISA = sqrt(delta_m delta_f)` exceeds `I0 = (J_f J_m)^(-1/2)`.
//!
//! Both `R0` and `ISA` are geometric means of their inputs (they are
//! sometimes loosely called harmonic means in the literature); the
//! geometric form is what is computed here.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::ActivityParams;
use crate::error::{Error, Result};
use crate::natural_history::{
    check_ages, log_viral_load_unchecked, solve_xstar, TransmissionParams, ViralLoadParams, Warp,
    XStar,
};
use crate::quadrature::{integrate_triangle, Estimate, GaussLegendre, QuadratureSpec};
use crate::survival::{survival_density, SurvivalParams, DEFAULT_OMEGA};

/// Baseline contact rate used when a scenario does not set one: the
/// equal-population critical rate rounded up.
pub const BASELINE_DELTA: f64 = 82.0;

/// Half-width of the band, relative to `I0`, reported as critical.
pub const CRITICAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Female => "female",
            Sex::Male => "male",
        }
    }
}

impl std::fmt::Display for Sex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Complete parameter set of one sex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileParts", into = "ProfileParts")]
pub struct SexProfile {
    label: Sex,
    viral: ViralLoadParams,
    transmission: TransmissionParams,
    activity: ActivityParams,
    survival: SurvivalParams,
    xstar: XStar,
    warp: Warp,
}

/// Serialized form; derived quantities are recomputed on the way back in.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileParts {
    label: Sex,
    viral: ViralLoadParams,
    transmission: TransmissionParams,
    activity: ActivityParams,
    survival: SurvivalParams,
}

impl TryFrom<ProfileParts> for SexProfile {
    type Error = Error;

    fn try_from(p: ProfileParts) -> Result<Self> {
        SexProfile::new(p.label, p.viral, p.transmission, p.activity, p.survival)
    }
}

impl From<SexProfile> for ProfileParts {
    fn from(p: SexProfile) -> Self {
        Self {
            label: p.label,
            viral: p.viral,
            transmission: p.transmission,
            activity: p.activity,
            survival: p.survival,
        }
    }
}

impl SexProfile {
    pub fn new(
        label: Sex,
        viral: ViralLoadParams,
        transmission: TransmissionParams,
        activity: ActivityParams,
        survival: SurvivalParams,
    ) -> Result<Self> {
        viral.validate()?;
        activity.validate()?;
        if viral.tau1 != activity.tau1 {
            return Err(Error::domain(format!(
                "tau1 differs between viral load ({}) and activity ({})",
                viral.tau1, activity.tau1
            )));
        }
        if !transmission.anchored_to(&viral) {
            return Err(Error::domain(
                "transmission coefficients were derived for different M1/m",
            ));
        }
        let xstar = solve_xstar(&viral)?;
        Ok(Self {
            label,
            viral,
            transmission,
            activity,
            survival,
            xstar,
            warp: Warp::new(viral.alpha2, xstar),
        })
    }

    /// Baseline parameters: shared trajectory and transmission anchors,
    /// sex-specific median survival, and [`BASELINE_DELTA`].
    pub fn baseline(label: Sex) -> Self {
        let viral = ViralLoadParams::default();
        let median = match label {
            Sex::Female => SurvivalParams::BASELINE_MEDIAN_FEMALE,
            Sex::Male => SurvivalParams::BASELINE_MEDIAN_MALE,
        };
        Self::new(
            label,
            viral,
            TransmissionParams::baseline(&viral).expect("baseline anchors are valid"),
            ActivityParams::new(BASELINE_DELTA, ActivityParams::BASELINE_PHI, viral.tau1)
                .expect("baseline activity is valid"),
            SurvivalParams::new(median, SurvivalParams::BASELINE_SHAPE)
                .expect("baseline survival is valid"),
        )
        .expect("baseline profile is valid")
    }

    pub fn label(&self) -> Sex {
        self.label
    }

    pub fn viral(&self) -> &ViralLoadParams {
        &self.viral
    }

    pub fn transmission(&self) -> &TransmissionParams {
        &self.transmission
    }

    pub fn activity(&self) -> &ActivityParams {
        &self.activity
    }

    pub fn survival(&self) -> &SurvivalParams {
        &self.survival
    }

    pub fn xstar(&self) -> XStar {
        self.xstar
    }

    pub fn delta(&self) -> f64 {
        self.activity.delta
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        let activity = ActivityParams::new(delta, self.activity.phi, self.activity.tau1)?;
        Ok(Self { activity, ..*self })
    }

    pub fn with_transmission(&self, transmission: TransmissionParams) -> Result<Self> {
        if !transmission.anchored_to(&self.viral) {
            return Err(Error::domain(
                "transmission coefficients were derived for different M1/m",
            ));
        }
        Ok(Self {
            transmission,
            ..*self
        })
    }

    pub fn with_label(&self, label: Sex) -> Self {
        Self { label, ..*self }
    }

    /// Upper bound of the per-act probability over the whole domain.
    pub fn max_transmission_prob(&self) -> f64 {
        self.transmission
            .prob_at_log_load(self.viral.max_log_load())
    }

    #[inline]
    pub(crate) fn ptr_unchecked(&self, ia: f64, iad: f64) -> f64 {
        let lvl = log_viral_load_unchecked(ia, iad, &self.viral, &self.warp);
        self.transmission.prob_at_log_load(lvl)
    }

    /// `G(ia, iad) * ptr(ia, iad)`: infections per act of baseline activity.
    #[inline]
    pub(crate) fn infectivity_unchecked(&self, ia: f64, iad: f64) -> f64 {
        let g = self.activity.fraction_unchecked(ia, iad);
        if g == 0.0 {
            return 0.0;
        }
        g * self.ptr_unchecked(ia, iad)
    }

    pub fn log_viral_load(&self, ia: f64, iad: f64) -> Result<f64> {
        check_ages(ia, iad)?;
        Ok(log_viral_load_unchecked(ia, iad, &self.viral, &self.warp))
    }

    pub fn transmission_prob(&self, ia: f64, iad: f64) -> Result<f64> {
        check_ages(ia, iad)?;
        Ok(self.ptr_unchecked(ia, iad))
    }

    pub fn activity_fraction(&self, ia: f64, iad: f64) -> Result<f64> {
        check_ages(ia, iad)?;
        Ok(self.activity.fraction_unchecked(ia, iad))
    }

    /// Inner integral `int_0^iad G(x, iad) ptr(x, iad) dx` for one fixed
    /// age at death, by composite Gauss-Legendre with the same breakpoints
    /// as the double integral and panels no wider than `max_width` years.
    pub fn life_course_integral(&self, iad: f64, rule: &GaussLegendre, max_width: f64) -> f64 {
        if iad <= self.activity.tau1 {
            return 0.0;
        }
        let mut breaks = vec![0.0];
        self.push_inner_breaks(iad, &mut breaks);
        breaks.retain(|&b| b >= 0.0 && b <= iad);
        breaks.push(iad);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let f = |x| self.infectivity_unchecked(x, iad);
        breaks
            .windows(2)
            .enumerate()
            .map(|(i, s)| {
                let panels = (((s[1] - s[0]) / max_width).ceil() as usize).max(1);
                if i == 0 {
                    rule.integrate_graded(f, s[0], s[1], panels)
                } else {
                    rule.integrate_panels(f, s[0], s[1], panels)
                }
            })
            .sum()
    }

    fn push_inner_breaks(&self, iad: f64, out: &mut Vec<f64>) {
        out.push(self.viral.ia1);
        out.push(iad - self.viral.tau1);
    }
}

/// Both sexes plus the integration horizon and optional head counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub female: SexProfile,
    pub male: SexProfile,
    pub omega: f64,
    pub pop_female: Option<f64>,
    pub pop_male: Option<f64>,
}

impl PopulationConfig {
    pub fn new(female: SexProfile, male: SexProfile, omega: f64) -> Result<Self> {
        let cfg = Self {
            female,
            male,
            omega,
            pop_female: None,
            pop_male: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn baseline() -> Self {
        Self::new(
            SexProfile::baseline(Sex::Female),
            SexProfile::baseline(Sex::Male),
            DEFAULT_OMEGA,
        )
        .expect("baseline population is valid")
    }

    pub fn with_deltas(&self, delta_f: f64, delta_m: f64) -> Result<Self> {
        Ok(Self {
            female: self.female.with_delta(delta_f)?,
            male: self.male.with_delta(delta_m)?,
            ..*self
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::domain(format!(
                "omega must be > 0, got {}",
                self.omega
            )));
        }
        self.female.survival().check_horizon(self.omega)?;
        self.male.survival().check_horizon(self.omega)?;
        for p in [self.pop_female, self.pop_male].into_iter().flatten() {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::domain(format!(
                    "population sizes must be > 0, got {p}"
                )));
            }
        }
        Ok(())
    }

    pub fn profile(&self, sex: Sex) -> &SexProfile {
        match sex {
            Sex::Female => &self.female,
            Sex::Male => &self.male,
        }
    }
}

/// Expected infections per unit of baseline activity, with the quadrature
/// error estimate.
pub fn sex_integral_estimate(
    profile: &SexProfile,
    omega: f64,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    if !(omega > 0.0) {
        return Err(Error::domain(format!("omega must be > 0, got {omega}")));
    }
    let survival = *profile.survival();
    // G vanishes for iad <= tau1.
    let y_lo = profile.activity().tau1.min(omega);
    integrate_triangle(
        |x, y| survival_density(y, &survival) * profile.infectivity_unchecked(x, y),
        y_lo,
        omega,
        |y, out| profile.push_inner_breaks(y, out),
        quad,
    )
}

pub fn sex_integral(profile: &SexProfile, omega: f64, quad: &QuadratureSpec) -> Result<f64> {
    sex_integral_estimate(profile, omega, quad).map(|e| e.value)
}

/// Sex-specific reproduction number `delta * J`.
pub fn sex_brn(delta: f64, integral: f64) -> f64 {
    delta * integral
}

/// Critical index of sexual activity `(J_f J_m)^(-1/2)`.
pub fn index_i0(integral_f: f64, integral_m: f64) -> Result<f64> {
    if !(integral_f > 0.0 && integral_m > 0.0) {
        return Err(Error::domain(format!(
            "I0 is undefined without transmission (integrals {integral_f}, {integral_m})"
        )));
    }
    Ok((integral_f * integral_m).sqrt().recip())
}

pub fn index_isa(delta_m: f64, delta_f: f64) -> f64 {
    (delta_m * delta_f).sqrt()
}

pub fn composite_r0(r_fm: f64, r_mf: f64) -> f64 {
    (r_fm * r_mf).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Epidemic,
    Subcritical,
    Critical,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Epidemic => "epidemic",
            Verdict::Subcritical => "subcritical",
            Verdict::Critical => "critical",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrnResult {
    pub integral_f: f64,
    pub integral_m: f64,
    pub delta_f: f64,
    pub delta_m: f64,
    pub r_fm: f64,
    pub r_mf: f64,
    pub r0: f64,
    pub i0: f64,
    pub isa: f64,
    pub verdict: Verdict,
    pub epidemic: bool,
}

/// Assembles every threshold quantity from the two integrals and contact
/// rates, and classifies the result.
pub fn brn_from_integrals(
    integral_f: f64,
    integral_m: f64,
    delta_f: f64,
    delta_m: f64,
) -> Result<BrnResult> {
    let r_fm = sex_brn(delta_f, integral_f);
    let r_mf = sex_brn(delta_m, integral_m);
    let mut result = BrnResult {
        integral_f,
        integral_m,
        delta_f,
        delta_m,
        r_fm,
        r_mf,
        r0: composite_r0(r_fm, r_mf),
        i0: index_i0(integral_f, integral_m)?,
        isa: index_isa(delta_m, delta_f),
        verdict: Verdict::Critical,
        epidemic: false,
    };
    result.verdict = threshold_check(&result)?;
    result.epidemic = result.verdict == Verdict::Epidemic;
    Ok(result)
}

fn classify(value: f64, threshold: f64, band: f64) -> Verdict {
    if (value - threshold).abs() <= band {
        Verdict::Critical
    } else if value > threshold {
        Verdict::Epidemic
    } else {
        Verdict::Subcritical
    }
}

/// Compares `ISA` with `I0` and `R0` with 1; the two must agree.
pub fn threshold_check(result: &BrnResult) -> Result<Verdict> {
    let by_index = classify(result.isa, result.i0, CRITICAL_BAND * result.i0);
    let by_r0 = classify(result.r0, 1.0, CRITICAL_BAND);
    if by_index == by_r0 {
        return Ok(by_index);
    }
    // Within the slack either side of criticality the two may straddle the band edge.
    let ratio = result.isa / result.i0;
    if (ratio - result.r0).abs() <= 1e-12 * result.r0.max(1.0)
        && ((ratio - 1.0).abs() <= 2.0 * CRITICAL_BAND
            || (result.r0 - 1.0).abs() <= 2.0 * CRITICAL_BAND)
    {
        return Ok(Verdict::Critical);
    }
    Err(Error::InconsistentResult(format!(
        "ISA = {} vs I0 = {} says {by_index}, R0 = {} says {by_r0}",
        result.isa, result.i0, result.r0
    )))
}

/// Computes both integrals and the full result at the profiles' own
/// contact rates.
pub fn evaluate(config: &PopulationConfig, quad: &QuadratureSpec) -> Result<BrnResult> {
    config.validate()?;
    let (jf, jm) = sex_integrals(config, quad)?;
    brn_from_integrals(jf, jm, config.female.delta(), config.male.delta())
}

/// `(J_f, J_m)` for a population.
pub fn sex_integrals(config: &PopulationConfig, quad: &QuadratureSpec) -> Result<(f64, f64)> {
    let (jf, jm) = rayon::join(
        || sex_integral(&config.female, config.omega, quad),
        || sex_integral(&config.male, config.omega, quad),
    );
    Ok((jf?, jm?))
}

/// Single-population reproduction number: the expected number of secondary
/// infections of one infective in a population that shares its profile.
pub fn single_sex_r0(profile: &SexProfile, omega: f64, quad: &QuadratureSpec) -> Result<f64> {
    Ok(sex_brn(
        profile.delta(),
        sex_integral(profile, omega, quad)?,
    ))
}

/// Points `(delta_m, I0^2 / delta_m)` of the `R0 = 1` hyperbola.
pub fn hyperbola_locus(i0: f64, delta_m_grid: &[f64]) -> Vec<(f64, f64)> {
    delta_m_grid.iter().map(|&dm| (dm, i0 * i0 / dm)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Multiply `ptr(ia, iad)` pointwise by the factor.
    ScaleFunction,
    /// Multiply `ptr_hi` and `ptr_lo` by the factor and re-derive the coefficients.
    ScaleEndpoints,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::ScaleFunction => "scale_function",
            SweepMode::ScaleEndpoints => "scale_endpoints",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub factor: f64,
    pub mode: SweepMode,
    pub integral_f: f64,
    pub integral_m: f64,
    pub i0: f64,
}

/// The population with both sexes' transmission functions scaled.
pub fn scale_transmission(
    config: &PopulationConfig,
    factor: f64,
    mode: SweepMode,
) -> Result<PopulationConfig> {
    let scale = |p: &SexProfile| -> Result<SexProfile> {
        let tp = match mode {
            SweepMode::ScaleFunction => {
                p.transmission().scaled(factor, p.viral().max_log_load())?
            }
            SweepMode::ScaleEndpoints => p.transmission().rescaled_anchors(factor)?,
        };
        p.with_transmission(tp)
    };
    Ok(PopulationConfig {
        female: scale(&config.female)?,
        male: scale(&config.male)?,
        ..*config
    })
}

/// `I0` under each scaling of the transmission probability, in input order.
pub fn sensitivity_sweep(
    config: &PopulationConfig,
    scale_factors: &[f64],
    mode: SweepMode,
    quad: &QuadratureSpec,
) -> Result<Vec<SweepPoint>> {
    scale_factors
        .par_iter()
        .map(|&factor| {
            let scaled = scale_transmission(config, factor, mode)?;
            let (jf, jm) = sex_integrals(&scaled, quad)?;
            Ok(SweepPoint {
                factor,
                mode,
                integral_f: jf,
                integral_m: jm,
                i0: index_i0(jf, jm)?,
            })
        })
        .collect()
}

/// Male contact rate that balances acts: `P_f delta_f = P_m delta_m`.
pub fn balance_partner_rate(pop_f: f64, pop_m: f64, delta_f: f64) -> Result<f64> {
    if !(pop_f > 0.0 && pop_m > 0.0 && pop_f.is_finite() && pop_m.is_finite()) {
        return Err(Error::domain(format!(
            "population sizes must be positive, got P_f = {pop_f}, P_m = {pop_m}"
        )));
    }
    Ok(pop_f * delta_f / pop_m)
}
