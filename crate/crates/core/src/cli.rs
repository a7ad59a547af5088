//! The `brn` command-line front end.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_scenario, Scenario};
use crate::mc_oracle::{estimate_sex_integral, ActProcess, SimulationSpec};
use crate::output::{
    Format, Metadata, OutputBundle, PhaseKind, PhaseRow, SimulationRow, SweepRow, TrajectoryRow,
};
use crate::reproduction::{
    composite_r0, evaluate, hyperbola_locus, sensitivity_sweep, sex_brn, sex_integral, Sex,
    SweepMode,
};
use crate::Error;

/// Corners `(delta_m, delta_f)` of the feasible contact-rate rectangle.
pub const FEASIBLE_CORNERS: [(f64, f64); 4] =
    [(26.0, 208.0), (26.0, 468.0), (104.0, 208.0), (104.0, 468.0)];

/// Transmission multipliers drawn by `phase`.
pub const PHASE_FACTORS: [f64; 3] = [1.0, 0.5, 2.0];

const MAX_TRAJECTORY_ROWS: f64 = 10_000_000.0;

#[derive(Debug, Parser)]
#[command(
    name = "brn",
    version,
    about = "Two-sex basic reproduction number for heterosexual HIV transmission"
)]
pub struct Cli {
    /// Scenario file (TOML); baseline values when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; defaults to table for eval, json for simulate, csv otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reproduction numbers, I0, ISA and the threshold verdict.
    Eval,
    /// Viral load, transmission probability and activity over one infection.
    Trajectory(TrajectoryArgs),
    /// The R0 = 1 hyperbola, the fixed point and the feasible-rectangle corners.
    Phase(PhaseArgs),
    /// I0 under scaled transmission probabilities.
    Sweep(SweepArgs),
    /// Monte Carlo estimate of the per-sex integrals, against quadrature.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SexArg {
    Female,
    Male,
}

impl From<SexArg> for Sex {
    fn from(s: SexArg) -> Self {
        match s {
            SexArg::Female => Sex::Female,
            SexArg::Male => Sex::Male,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimulatedSex {
    Female,
    Male,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    ScaleFunction,
    ScaleEndpoints,
}

impl From<ModeArg> for SweepMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ScaleFunction => SweepMode::ScaleFunction,
            ModeArg::ScaleEndpoints => SweepMode::ScaleEndpoints,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcessArg {
    PoissonThinning,
    ExpectedValue,
}

impl From<ProcessArg> for ActProcess {
    fn from(p: ProcessArg) -> Self {
        match p {
            ProcessArg::PoissonThinning => ActProcess::PoissonThinning,
            ProcessArg::ExpectedValue => ActProcess::ExpectedValue,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    /// Infective age at death, in years.
    #[arg(long, default_value_t = 7.0)]
    pub iad: f64,
    /// Sampling step, in years.
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, value_enum, default_value = "female")]
    pub sex: SexArg,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    /// Smallest male contact rate on the hyperbolas.
    #[arg(long, default_value_t = 10.0)]
    pub dm_min: f64,
    /// Largest male contact rate on the hyperbolas.
    #[arg(long, default_value_t = 500.0)]
    pub dm_max: f64,
    /// Points per hyperbola.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "scale-function")]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated multipliers; an empty list gives an empty table.
    #[arg(long, default_value = "0.5,1,2", allow_hyphen_values = true)]
    pub factors: String,
    #[arg(long, value_enum, default_value = "scale-function")]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, value_enum, default_value = "both")]
    pub sex: SimulatedSex,
    #[arg(long, value_enum)]
    pub act_process: Option<ProcessArg>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// A failed command and its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid scenario or flags (exit 2).
    Config(String),
    /// The computation itself failed (exit 3).
    Numerical(Error),
    /// Reading or writing files (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => f.write_str(m),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

fn flag_error(msg: impl Into<String>) -> CliError {
    CliError::Config(format!("invalid flag: {}", msg.into()))
}

/// Parses `"0.5, 1,2"`; blank entries are skipped.
pub fn parse_factors(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let v: f64 = s
                .parse()
                .map_err(|_| flag_error(format!("--factors: cannot parse {s:?}")))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(flag_error(format!(
                    "--factors: factors must be positive, got {s}"
                )));
            }
            Ok(v)
        })
        .collect()
}

fn load_scenario(cli: &Cli) -> Result<(Scenario, Vec<u8>), CliError> {
    let Some(path) = &cli.config else {
        return Ok((Scenario::default(), Vec::new()));
    };
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Config(format!("{}: not UTF-8: {e}", path.display())))?;
    let scenario =
        parse_scenario(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((scenario, bytes))
}

/// Runs a parsed command line and returns the rendered output.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let (scenario, raw) = load_scenario(cli)?;
    let (bundle, default_format) = match &cli.command {
        Command::Eval => (eval(&scenario, &raw)?, Format::Table),
        Command::Trajectory(a) => (trajectory(&scenario, &raw, a)?, Format::Csv),
        Command::Phase(a) => (phase(&scenario, &raw, a)?, Format::Csv),
        Command::Sweep(a) => (sweep(&scenario, &raw, a)?, Format::Csv),
        Command::Simulate(a) => (simulate(&scenario, &raw, a)?, Format::Json),
    };
    bundle
        .render(cli.format.unwrap_or(default_format))
        .map_err(CliError::Io)
}

fn eval(s: &Scenario, raw: &[u8]) -> Result<OutputBundle, CliError> {
    let mut b = OutputBundle::new(Metadata::new("eval", raw, None));
    b.verdict = Some(evaluate(&s.population, &s.quadrature)?);
    Ok(b)
}

fn trajectory(s: &Scenario, raw: &[u8], a: &TrajectoryArgs) -> Result<OutputBundle, CliError> {
    let omega = s.population.omega;
    if !(a.iad >= 0.0 && a.iad <= omega) {
        return Err(flag_error(format!(
            "--iad must lie in [0, omega = {omega}], got {}",
            a.iad
        )));
    }
    if !(a.step > 0.0 && a.step.is_finite()) {
        return Err(flag_error(format!(
            "--step must be positive, got {}",
            a.step
        )));
    }
    if a.iad / a.step > MAX_TRAJECTORY_ROWS {
        return Err(flag_error(format!("--step {} gives too many rows", a.step)));
    }
    let profile = s.population.profile(a.sex.into());
    let tau1 = profile.viral().tau1;
    let n = (a.iad / a.step).floor() as usize;
    let mut ages: Vec<f64> = (0..=n).map(|k| (k as f64 * a.step).min(a.iad)).collect();
    if a.iad - tau1 >= 0.0 {
        ages.push(a.iad - tau1);
    }
    ages.push(a.iad);
    ages.sort_by(f64::total_cmp);
    ages.dedup();

    let rows = ages
        .into_iter()
        .map(|ia| {
            let ptr = profile.transmission_prob(ia, a.iad)?;
            let g = profile.activity_fraction(ia, a.iad)?;
            Ok(TrajectoryRow {
                ia,
                lvl: profile.log_viral_load(ia, a.iad)?,
                ptr,
                ptr_x1000: 1000.0 * ptr,
                g,
                nca: profile.delta() * g,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut b = OutputBundle::new(Metadata::new("trajectory", raw, None));
    b.trajectory = Some(rows);
    Ok(b)
}

fn phase(s: &Scenario, raw: &[u8], a: &PhaseArgs) -> Result<OutputBundle, CliError> {
    if !(a.dm_min > 0.0 && a.dm_max >= a.dm_min && a.dm_max.is_finite()) {
        return Err(flag_error(format!(
            "grid bounds must satisfy 0 < --dm-min <= --dm-max, got {} and {}",
            a.dm_min, a.dm_max
        )));
    }
    if a.points == 0 {
        return Err(flag_error("--points must be positive"));
    }
    let grid: Vec<f64> = if a.points == 1 {
        vec![a.dm_min]
    } else {
        (0..a.points)
            .map(|k| a.dm_min + (a.dm_max - a.dm_min) * k as f64 / (a.points - 1) as f64)
            .collect()
    };
    let sweep = sensitivity_sweep(&s.population, &PHASE_FACTORS, a.mode.into(), &s.quadrature)?;

    let mut rows = Vec::new();
    let row = |kind, factor, dm: f64, df: f64, jf: f64, jm: f64, i0| {
        let (r_fm, r_mf) = (sex_brn(df, jf), sex_brn(dm, jm));
        PhaseRow {
            kind,
            factor,
            delta_m: dm,
            delta_f: df,
            i0,
            r_fm,
            r_mf,
            r0: composite_r0(r_fm, r_mf),
        }
    };
    for p in &sweep {
        rows.push(row(
            PhaseKind::FixedPoint,
            p.factor,
            p.i0,
            p.i0,
            p.integral_f,
            p.integral_m,
            p.i0,
        ));
        for (dm, df) in hyperbola_locus(p.i0, &grid) {
            rows.push(row(
                PhaseKind::Hyperbola,
                p.factor,
                dm,
                df,
                p.integral_f,
                p.integral_m,
                p.i0,
            ));
        }
    }
    let base = &sweep[0];
    for (dm, df) in FEASIBLE_CORNERS {
        rows.push(row(
            PhaseKind::Corner,
            base.factor,
            dm,
            df,
            base.integral_f,
            base.integral_m,
            base.i0,
        ));
    }
    let mut b = OutputBundle::new(Metadata::new("phase", raw, None));
    b.phase = Some(rows);
    Ok(b)
}

fn sweep(s: &Scenario, raw: &[u8], a: &SweepArgs) -> Result<OutputBundle, CliError> {
    let factors = parse_factors(&a.factors)?;
    let points = sensitivity_sweep(&s.population, &factors, a.mode.into(), &s.quadrature)?;
    let mut b = OutputBundle::new(Metadata::new("sweep", raw, None));
    b.sweep = Some(
        points
            .into_iter()
            .map(|p| SweepRow {
                factor: p.factor,
                mode: p.mode,
                integral_f: p.integral_f,
                integral_m: p.integral_m,
                i0: p.i0,
            })
            .collect(),
    );
    Ok(b)
}

fn simulate(s: &Scenario, raw: &[u8], a: &SimulateArgs) -> Result<OutputBundle, CliError> {
    let spec = SimulationSpec {
        samples: a.samples.unwrap_or(s.simulation.samples),
        seed: a.seed.unwrap_or(s.simulation.seed),
        act_process: a.act_process.map_or(s.simulation.act_process, Into::into),
        threads: a.threads.or(s.simulation.threads),
    };
    spec.validate().map_err(|e| flag_error(e.to_string()))?;
    let sexes: &[Sex] = match a.sex {
        SimulatedSex::Female => &[Sex::Female],
        SimulatedSex::Male => &[Sex::Male],
        SimulatedSex::Both => &[Sex::Female, Sex::Male],
    };
    let mut rows = Vec::with_capacity(sexes.len());
    for &sex in sexes {
        let profile = s.population.profile(sex);
        if !(profile.delta() > 0.0) {
            return Err(CliError::Config(format!(
                "config error: simulating the {sex} act process needs delta > 0"
            )));
        }
        let est = estimate_sex_integral(profile, &spec)?;
        let quadrature = sex_integral(profile, s.population.omega, &s.quadrature)?;
        let abs_diff = (est.mean - quadrature).abs();
        rows.push(SimulationRow {
            sex,
            act_process: est.act_process,
            samples: est.samples,
            seed: est.seed,
            mean: est.mean,
            std_error: est.std_error,
            std_error_defined: est.std_error_defined,
            quadrature,
            abs_diff,
            z: (est.std_error_defined && est.std_error > 0.0).then(|| abs_diff / est.std_error),
        });
    }
    let mut b = OutputBundle::new(Metadata::new("simulate", raw, Some(spec.seed)));
    b.simulation = Some(rows);
    Ok(b)
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|text| match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("brn: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_lists() {
        assert_eq!(parse_factors("0.5,1, 2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert!(parse_factors("").unwrap().is_empty());
        assert!(parse_factors(" , ").unwrap().is_empty());
        assert_eq!(parse_factors("x").unwrap_err().exit_code(), 2);
        assert_eq!(parse_factors("-1").unwrap_err().exit_code(), 2);
        assert_eq!(parse_factors("0").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
