//! Monte Carlo estimate of the sex-specific infection integral.
//!
//! Each sample is one infective life course: an age at death drawn from the
//! Weibull law, coital acts generated as an inhomogeneous Poisson process of
//! rate `delta * G(ia, iad)` by thinning a homogeneous process of rate
//! `delta`, and each act transmitting independently with probability
//! `ptr(ia, iad)`. Dividing the infection count by `delta` gives an unbiased
//! estimate of the same double integral the quadrature computes.
//!
//! Sample `i` draws from its own ChaCha8 stream `i` under the user seed, and
//! partial sums are formed over fixed chunks and combined in index order, so
//! results do not depend on the number of worker threads.

use std::sync::OnceLock;

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::reproduction::SexProfile;
use crate::survival::SurvivalParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActProcess {
    /// Simulate individual acts and transmissions.
    PoissonThinning,
    /// Replace the act process by its conditional expectation given `iad`.
    ExpectedValue,
}

impl ActProcess {
    pub fn as_str(self) -> &'static str {
        match self {
            ActProcess::PoissonThinning => "poisson_thinning",
            ActProcess::ExpectedValue => "expected_value",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub samples: u64,
    pub seed: u64,
    pub act_process: ActProcess,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 2008,
            act_process: ActProcess::PoissonThinning,
            threads: None,
        }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::domain("simulation needs at least one sample"));
        }
        if self.threads == Some(0) {
            return Err(Error::domain("thread count must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(samples)`; 0 when undefined.
    pub std_error: f64,
    /// False when a single sample leaves the standard error undefined.
    pub std_error_defined: bool,
    pub samples: u64,
    pub seed: u64,
    pub act_process: ActProcess,
}

/// Inverse-transform draw of the infective age at death. `u` must lie in `(0, 1)`.
pub fn sample_iad(u: f64, p: &SurvivalParams) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!(
            "uniform draw must lie in (0, 1), got {u}"
        )));
    }
    Ok(p.scale() * (-(-u).ln_1p()).powf(1.0 / p.shape()))
}

/// Candidate acts of a homogeneous Poisson process of rate `bound` on
/// `[0, horizon]`, each kept with probability `keep(ia)` (which must not
/// exceed 1). `visit` sees every candidate with its verdict.
pub fn thin_acts<R, K, V>(horizon: f64, bound: f64, keep: K, rng: &mut R, mut visit: V)
where
    R: Rng + ?Sized,
    K: Fn(f64) -> f64,
    V: FnMut(f64, bool, &mut R),
{
    let mean = bound * horizon;
    if !(mean > 0.0) {
        return;
    }
    let n = Poisson::new(mean)
        .map(|d| d.sample(rng) as u64)
        .unwrap_or(0);
    for _ in 0..n {
        let ia = horizon * rng.random::<f64>();
        let accepted = rng.random::<f64>() < keep(ia);
        visit(ia, accepted, rng);
    }
}

/// Number of transmissions when acts arrive at rate `bound * keep(ia)` and
/// each transmits with probability `mark(ia) <= mark_bound`.
///
/// `mark` is only evaluated for uniforms below `mark_bound`; the outcome is
/// the same as comparing every uniform against `mark(ia)`.
pub fn count_marked_acts<R, K, M>(
    horizon: f64,
    bound: f64,
    keep: K,
    mark: M,
    mark_bound: f64,
    rng: &mut R,
) -> u64
where
    R: Rng + ?Sized,
    K: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    let mut count = 0;
    thin_acts(horizon, bound, keep, rng, |ia, accepted, rng| {
        if accepted {
            let u = rng.random::<f64>();
            if u < mark_bound && u < mark(ia) {
                count += 1;
            }
        }
    });
    count
}

/// Widest inner panel, in years, for the expected-value variant.
const EXPECTED_VALUE_PANEL_WIDTH: f64 = 0.5;
const EXPECTED_VALUE_ORDER: usize = 10;

/// Secondary infections caused during one life course ending at `iad`.
///
/// With [`ActProcess::PoissonThinning`] this is a realized count; with
/// [`ActProcess::ExpectedValue`] it is the conditional mean
/// `delta * int_0^iad G ptr dx`.
pub fn simulate_life_course<R: Rng + ?Sized>(
    iad: f64,
    profile: &SexProfile,
    process: ActProcess,
    rng: &mut R,
) -> f64 {
    match process {
        ActProcess::PoissonThinning => simulate_infections(iad, profile, rng) as f64,
        ActProcess::ExpectedValue => {
            static RULE: OnceLock<GaussLegendre> = OnceLock::new();
            let rule =
                RULE.get_or_init(|| GaussLegendre::new(EXPECTED_VALUE_ORDER).expect("fixed order"));
            profile.delta() * profile.life_course_integral(iad, rule, EXPECTED_VALUE_PANEL_WIDTH)
        }
    }
}

fn simulate_infections<R: Rng + ?Sized>(iad: f64, profile: &SexProfile, rng: &mut R) -> u64 {
    if iad <= profile.activity().tau1 {
        return 0;
    }
    let activity = *profile.activity();
    count_marked_acts(
        iad,
        activity.delta,
        |ia| activity.fraction_unchecked(ia, iad),
        |ia| profile.ptr_unchecked(ia, iad),
        profile.max_transmission_prob(),
        rng,
    )
}

/// Random stream of sample `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Fixed chunk size of the ordered reduction.
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        Moments {
            n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / n as f64,
        }
    }
}

/// Estimates `int s(y) int G ptr dx dy` from `spec.samples` life courses.
pub fn estimate_sex_integral(
    profile: &SexProfile,
    spec: &SimulationSpec,
) -> Result<EstimateResult> {
    spec.validate()?;
    let delta = profile.delta();
    if !(delta > 0.0) {
        return Err(Error::domain(
            "the simulated act process needs a positive contact rate delta",
        ));
    }
    let survival = *profile.survival();
    let run = || {
        let chunks = spec.samples.div_ceil(CHUNK);
        let parts: Vec<Moments> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut m = Moments::default();
                let end = ((c + 1) * CHUNK).min(spec.samples);
                for i in c * CHUNK..end {
                    let mut rng = sample_rng(spec.seed, i);
                    let u: f64 = Open01.sample(&mut rng);
                    let iad = sample_iad(u, &survival).expect("Open01 lies in (0, 1)");
                    m.push(simulate_life_course(iad, profile, spec.act_process, &mut rng) / delta);
                }
                m
            })
            .collect();
        parts.into_iter().fold(Moments::default(), Moments::merge)
    };
    let moments = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    let n = moments.n as f64;
    let (std_error, defined) = if moments.n > 1 {
        ((moments.m2 / (n - 1.0)).sqrt() / n.sqrt(), true)
    } else {
        (0.0, false)
    };
    Ok(EstimateResult {
        mean: moments.mean,
        std_error,
        std_error_defined: defined,
        samples: moments.n,
        seed: spec.seed,
        act_process: spec.act_process,
    })
}
