//! TOML scenario files.
//!
//! Every key is optional; anything left out takes its baseline value. A
//! file with no content at all describes the baseline population.
//!
//! ```toml
//! [female]
//! delta = 208       # acts per year with different partners
//! median = 8.6      # median years from infection to death
//!
//! [male]
//! delta = 26
//!
//! [population]
//! omega = 40
//! pop_female = 1
//! pop_male = 8
//!
//! [quadrature]
//! order = 32
//! tolerance = 1e-9
//! max_refinements = 8
//!
//! [simulation]
//! samples = 100000
//! seed = 2008
//! act_process = "poisson_thinning"
//! ```
//!
//! Sex sections accept `ia1, M1, m, tau1, M2, alpha1, alpha2, alpha3,
//! ptr_hi, ptr_lo, delta, phi, median, beta`. When `pop_female` and
//! `pop_male` are both given and `[male] delta` is not, the male rate is
//! set so that both sexes perform the same total number of acts.

use std::fmt;

use serde::Deserialize;
use toml::Spanned;

use crate::behavior::ActivityParams;
use crate::error::Error;
use crate::mc_oracle::{ActProcess, SimulationSpec};
use crate::natural_history::{TransmissionParams, ViralLoadParams};
use crate::quadrature::QuadratureSpec;
use crate::reproduction::{
    balance_partner_rate, PopulationConfig, Sex, SexProfile, BASELINE_DELTA,
};
use crate::survival::{SurvivalParams, DEFAULT_OMEGA};

/// An invalid scenario, with the 1-based line of the offending key when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config error at line {line}: {}", self.message),
            None => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Field<T> = Option<Spanned<T>>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub female: SexSection,
    #[serde(default)]
    pub male: SexSection,
    #[serde(default)]
    pub population: PopulationSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SexSection {
    pub ia1: Field<f64>,
    #[serde(rename = "M1")]
    pub peak1: Field<f64>,
    #[serde(rename = "m")]
    pub plateau: Field<f64>,
    pub tau1: Field<f64>,
    #[serde(rename = "M2")]
    pub peak2: Field<f64>,
    pub alpha1: Field<f64>,
    pub alpha2: Field<f64>,
    pub alpha3: Field<f64>,
    pub ptr_hi: Field<f64>,
    pub ptr_lo: Field<f64>,
    pub delta: Field<f64>,
    pub phi: Field<f64>,
    pub median: Field<f64>,
    pub beta: Field<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSection {
    pub omega: Field<f64>,
    pub pop_female: Field<f64>,
    pub pop_male: Field<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub order: Field<u64>,
    pub tolerance: Field<f64>,
    pub max_refinements: Field<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub samples: Field<u64>,
    pub seed: Field<u64>,
    pub act_process: Field<ActProcess>,
    pub threads: Field<u64>,
}

/// A fully resolved and validated scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub population: PopulationConfig,
    pub quadrature: QuadratureSpec,
    pub simulation: SimulationSpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            population: PopulationConfig::baseline(),
            quadrature: QuadratureSpec::default(),
            simulation: SimulationSpec::default(),
        }
    }
}

fn line_at(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

struct Resolver<'a> {
    source: &'a str,
}

impl Resolver<'_> {
    fn line<T>(&self, field: &Field<T>) -> Option<usize> {
        field.as_ref().map(|s| line_at(self.source, s.span().start))
    }

    /// First line among the fields that are present.
    fn first_line(&self, lines: &[Option<usize>]) -> Option<usize> {
        lines.iter().flatten().copied().min()
    }

    fn value(
        &self,
        field: &Field<f64>,
        default: f64,
        key: &str,
        ok: impl Fn(f64) -> bool,
        rule: &str,
    ) -> Result<f64, ConfigError> {
        let v = field.as_ref().map_or(default, |s| *s.get_ref());
        if !v.is_finite() || !ok(v) {
            return Err(ConfigError::new(
                self.line(field),
                format!("{key} = {v}: {rule}"),
            ));
        }
        Ok(v)
    }

    fn sex(&self, section: &SexSection, label: Sex) -> Result<SexProfile, ConfigError> {
        let name = label.as_str();
        let base_viral = ViralLoadParams::default();
        let key = |k: &str| format!("[{name}] {k}");
        let any = |_: f64| true;
        let viral = ViralLoadParams {
            ia1: self.value(
                &section.ia1,
                base_viral.ia1,
                &key("ia1"),
                |v| v > 0.0,
                "must be > 0",
            )?,
            peak1: self.value(
                &section.peak1,
                base_viral.peak1,
                &key("M1"),
                any,
                "must be finite",
            )?,
            plateau: self.value(
                &section.plateau,
                base_viral.plateau,
                &key("m"),
                |v| v > 0.0,
                "must be > 0",
            )?,
            tau1: self.value(
                &section.tau1,
                base_viral.tau1,
                &key("tau1"),
                |v| v > 0.0,
                "must be > 0",
            )?,
            peak2: self.value(
                &section.peak2,
                base_viral.peak2,
                &key("M2"),
                any,
                "must be finite",
            )?,
            alpha1: self.value(
                &section.alpha1,
                base_viral.alpha1,
                &key("alpha1"),
                |v| v > 1.0,
                "must be > 1",
            )?,
            alpha2: self.value(
                &section.alpha2,
                base_viral.alpha2,
                &key("alpha2"),
                any,
                "must be finite",
            )?,
            alpha3: self.value(
                &section.alpha3,
                base_viral.alpha3,
                &key("alpha3"),
                |v| v > 0.0,
                "must be > 0",
            )?,
        };
        if !(viral.peak1 > viral.plateau) {
            return Err(ConfigError::new(
                self.first_line(&[self.line(&section.peak1), self.line(&section.plateau)]),
                format!(
                    "[{name}] needs M1 > m, got M1 = {}, m = {}",
                    viral.peak1, viral.plateau
                ),
            ));
        }
        if !(viral.peak2 > viral.plateau) {
            return Err(ConfigError::new(
                self.first_line(&[self.line(&section.peak2), self.line(&section.plateau)]),
                format!(
                    "[{name}] needs M2 > m, got M2 = {}, m = {}",
                    viral.peak2, viral.plateau
                ),
            ));
        }
        let unit = |v: f64| v > 0.0 && v < 1.0;
        let ptr_hi = self.value(
            &section.ptr_hi,
            TransmissionParams::BASELINE_PTR_HI,
            &key("ptr_hi"),
            unit,
            "must lie in (0, 1)",
        )?;
        let ptr_lo = self.value(
            &section.ptr_lo,
            TransmissionParams::BASELINE_PTR_LO,
            &key("ptr_lo"),
            unit,
            "must lie in (0, 1)",
        )?;
        if ptr_lo > ptr_hi {
            return Err(ConfigError::new(
                self.first_line(&[self.line(&section.ptr_hi), self.line(&section.ptr_lo)]),
                format!(
                    "[{name}] needs ptr_lo <= ptr_hi, got ptr_lo = {ptr_lo}, ptr_hi = {ptr_hi}"
                ),
            ));
        }
        let delta = self.value(
            &section.delta,
            BASELINE_DELTA,
            &key("delta"),
            |v| v >= 0.0,
            "must be >= 0",
        )?;
        let phi = self.value(
            &section.phi,
            ActivityParams::BASELINE_PHI,
            &key("phi"),
            unit,
            "must lie in (0, 1)",
        )?;
        let default_median = match label {
            Sex::Female => SurvivalParams::BASELINE_MEDIAN_FEMALE,
            Sex::Male => SurvivalParams::BASELINE_MEDIAN_MALE,
        };
        let median = self.value(
            &section.median,
            default_median,
            &key("median"),
            |v| v > 0.0,
            "must be > 0",
        )?;
        let beta = self.value(
            &section.beta,
            SurvivalParams::BASELINE_SHAPE,
            &key("beta"),
            |v| v > 0.0,
            "must be > 0",
        )?;

        let section_line = self.first_line(&[
            self.line(&section.ia1),
            self.line(&section.peak1),
            self.line(&section.plateau),
            self.line(&section.tau1),
            self.line(&section.peak2),
            self.line(&section.alpha1),
            self.line(&section.alpha2),
            self.line(&section.alpha3),
            self.line(&section.ptr_hi),
            self.line(&section.ptr_lo),
            self.line(&section.delta),
            self.line(&section.phi),
            self.line(&section.median),
            self.line(&section.beta),
        ]);
        let wrap = |e: Error| ConfigError::new(section_line, format!("[{name}] {e}"));
        let transmission = TransmissionParams::new(ptr_hi, ptr_lo, &viral).map_err(wrap)?;
        let activity = ActivityParams::new(delta, phi, viral.tau1).map_err(wrap)?;
        let survival = SurvivalParams::new(median, beta).map_err(wrap)?;
        SexProfile::new(label, viral, transmission, activity, survival).map_err(wrap)
    }

    fn resolve(&self, file: &ScenarioFile) -> Result<Scenario, ConfigError> {
        let female = self.sex(&file.female, Sex::Female)?;
        let mut male = self.sex(&file.male, Sex::Male)?;

        let pop = &file.population;
        let omega = self.value(
            &pop.omega,
            DEFAULT_OMEGA,
            "[population] omega",
            |v| v > 0.0,
            "must be > 0",
        )?;
        let positive = |v: f64| v > 0.0;
        let pop_female = pop
            .pop_female
            .as_ref()
            .map(|_| {
                self.value(
                    &pop.pop_female,
                    0.0,
                    "[population] pop_female",
                    positive,
                    "must be > 0",
                )
            })
            .transpose()?;
        let pop_male = pop
            .pop_male
            .as_ref()
            .map(|_| {
                self.value(
                    &pop.pop_male,
                    0.0,
                    "[population] pop_male",
                    positive,
                    "must be > 0",
                )
            })
            .transpose()?;
        if let (Some(pf), Some(pm), None) = (pop_female, pop_male, &file.male.delta) {
            let dm = balance_partner_rate(pf, pm, female.delta())
                .map_err(|e| ConfigError::new(self.line(&pop.pop_male), e.to_string()))?;
            male = male
                .with_delta(dm)
                .map_err(|e| ConfigError::new(self.line(&pop.pop_male), e.to_string()))?;
        }
        for p in [&female, &male] {
            p.survival().check_horizon(omega).map_err(|e| {
                ConfigError::new(
                    self.line(&pop.omega),
                    format!("[population] omega: {e} for the {} profile", p.label()),
                )
            })?;
        }
        let mut population = PopulationConfig::new(female, male, omega)
            .map_err(|e| ConfigError::new(self.line(&pop.omega), e.to_string()))?;
        population.pop_female = pop_female;
        population.pop_male = pop_male;

        let q = &file.quadrature;
        let defaults = QuadratureSpec::default();
        let quadrature = QuadratureSpec {
            order: q
                .order
                .as_ref()
                .map_or(defaults.order as u64, |s| *s.get_ref()) as usize,
            tolerance: q
                .tolerance
                .as_ref()
                .map_or(defaults.tolerance, |s| *s.get_ref()),
            max_refinements: q
                .max_refinements
                .as_ref()
                .map_or(defaults.max_refinements as u64, |s| *s.get_ref())
                .min(u32::MAX as u64) as u32,
        };
        quadrature.validate().map_err(|e| {
            ConfigError::new(
                self.first_line(&[
                    self.line(&q.order),
                    self.line(&q.tolerance),
                    self.line(&q.max_refinements),
                ]),
                format!("[quadrature] {e}"),
            )
        })?;

        let s = &file.simulation;
        let defaults = SimulationSpec::default();
        let simulation = SimulationSpec {
            samples: s
                .samples
                .as_ref()
                .map_or(defaults.samples, |v| *v.get_ref()),
            seed: s.seed.as_ref().map_or(defaults.seed, |v| *v.get_ref()),
            act_process: s
                .act_process
                .as_ref()
                .map_or(defaults.act_process, |v| *v.get_ref()),
            threads: s.threads.as_ref().map(|v| *v.get_ref() as usize),
        };
        simulation.validate().map_err(|e| {
            ConfigError::new(
                self.first_line(&[self.line(&s.samples), self.line(&s.threads)]),
                format!("[simulation] {e}"),
            )
        })?;

        Ok(Scenario {
            population,
            quadrature,
            simulation,
        })
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(source: &str) -> Result<Scenario, ConfigError> {
    let file: ScenarioFile = toml::from_str(source).map_err(|e| {
        ConfigError::new(
            e.span().map(|s| line_at(source, s.start)),
            e.message().trim().to_string(),
        )
    })?;
    Resolver { source }.resolve(&file)
}
