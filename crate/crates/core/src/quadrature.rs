//! Gauss-Legendre rules and a refining tensor rule on the triangle
//! `{0 <= x <= y, y_lo <= y <= y_hi}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order, relative-error target and refinement cap of the triangle rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Relative-error target.
    pub tolerance: f64,
    /// Maximum number of panel doublings.
    pub max_refinements: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            order: 32,
            tolerance: 1e-9,
            max_refinements: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > 256 {
            return Err(Error::domain(format!(
                "quadrature order must lie in 1..=256, got {}",
                self.order
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::domain(format!(
                "quadrature tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_refinements > 20 {
            return Err(Error::domain(format!(
                "max_refinements must be at most 20, got {}",
                self.max_refinements
            )));
        }
        Ok(())
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("Gauss-Legendre order must be positive"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]` with one panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(mid + half * t))
            .sum::<f64>()
            * half
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal panels.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
        panels: usize,
    ) -> f64 {
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * width;
                let hi = if k + 1 == panels { b } else { lo + width };
                self.integrate(&mut f, lo, hi)
            })
            .sum()
    }

    /// Like [`integrate_panels`](Self::integrate_panels), but the first
    /// panel is replaced by a geometric mesh `a + h * GRADING_RATIO^j`
    /// that resolves algebraic or logarithmic endpoint behaviour at `a`.
    pub fn integrate_graded<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
        panels: usize,
    ) -> f64 {
        let width = (b - a) / panels as f64;
        let first_hi = if panels == 1 { b } else { a + width };
        let mut sum = 0.0;
        let mut hi = first_hi;
        for _ in 0..GRADING_LEVELS {
            let lo = a + (hi - a) * GRADING_RATIO;
            sum += self.integrate(&mut f, lo, hi);
            hi = lo;
        }
        sum += self.integrate(&mut f, a, hi);
        if panels > 1 {
            sum += self.integrate_panels(&mut f, first_hi, b, panels - 1);
        }
        sum
    }
}

/// Ratio between successive panels of the geometric endpoint mesh.
pub const GRADING_RATIO: f64 = 0.15;
/// Number of geometric panels; the innermost has relative width 0.15^10.
pub const GRADING_LEVELS: usize = 10;

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let prev = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (x * p - prev) / (x * x - 1.0);
    (p, d)
}

/// Result of a refining quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// `|Q_k - Q_{k-1}| / |Q_k|` at the last level.
    pub relative_error: f64,
    pub refinements: u32,
    pub evaluations: u64,
}

const BASE_OUTER_PANELS: usize = 4;

/// Integrates `f(x, y)` over `x in [0, y]`, `y in [y_lo, y_hi]`.
///
/// Each level uses `BASE_OUTER_PANELS * 2^k` outer panels and splits every
/// inner segment (delimited by the points `inner_breaks` writes for the
/// current `y`) into `2^k` panels. The lowest outer panel and the inner
/// segment starting at `x = 0` are geometrically graded toward their left
/// ends. Levels are doubled until successive estimates agree to the
/// relative tolerance.
pub fn integrate_triangle<F, B>(
    f: F,
    y_lo: f64,
    y_hi: f64,
    inner_breaks: B,
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64,
    B: Fn(f64, &mut Vec<f64>),
{
    spec.validate()?;
    if !(y_lo.is_finite() && y_hi.is_finite()) || y_lo > y_hi || y_lo < 0.0 {
        return Err(Error::domain(format!(
            "invalid outer range [{y_lo}, {y_hi}]"
        )));
    }
    if y_lo == y_hi {
        return Ok(Estimate {
            value: 0.0,
            relative_error: 0.0,
            refinements: 0,
            evaluations: 0,
        });
    }
    let rule = GaussLegendre::new(spec.order)?;
    let mut breaks = Vec::with_capacity(8);
    let mut evaluations = 0u64;

    let mut level_estimate = |level: u32, evaluations: &mut u64| -> f64 {
        let inner_panels = 1usize << level;
        let outer_panels = BASE_OUTER_PANELS << level;
        rule.integrate_graded(
            |y| {
                breaks.clear();
                breaks.push(0.0);
                inner_breaks(y, &mut breaks);
                breaks.retain(|&b| b >= 0.0 && b <= y);
                breaks.push(y);
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let mut sum = 0.0;
                for (i, seg) in breaks.windows(2).enumerate() {
                    if seg[1] > seg[0] {
                        sum += if i == 0 {
                            *evaluations += ((inner_panels + GRADING_LEVELS) * rule.order()) as u64;
                            rule.integrate_graded(|x| f(x, y), seg[0], seg[1], inner_panels)
                        } else {
                            *evaluations += (inner_panels * rule.order()) as u64;
                            rule.integrate_panels(|x| f(x, y), seg[0], seg[1], inner_panels)
                        };
                    }
                }
                sum
            },
            y_lo,
            y_hi,
            outer_panels,
        )
    };

    let mut previous = level_estimate(0, &mut evaluations);
    let mut last_error = f64::INFINITY;
    for level in 1..=spec.max_refinements {
        let current = level_estimate(level, &mut evaluations);
        let diff = (current - previous).abs();
        let relative_error = if current == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / current.abs()
        };
        if !current.is_finite() {
            break;
        }
        if relative_error <= spec.tolerance {
            return Ok(Estimate {
                value: current,
                relative_error,
                refinements: level,
                evaluations,
            });
        }
        previous = current;
        last_error = relative_error;
    }
    Err(Error::QuadratureFailure {
        estimate: previous,
        relative_error: last_error,
        refinements: spec.max_refinements,
        tolerance: spec.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        for n in [1, 2, 5, 16, 31] {
            let rule = GaussLegendre::new(n).unwrap();
            let wsum: f64 = rule.weights().iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n = {n}");
            let deg = 2 * n - 1;
            let got = rule.integrate(|x| x.powi(deg as i32 - 1), 0.0, 1.0);
            assert!((got - 1.0 / deg as f64).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn nodes_known_values() {
        let rule = GaussLegendre::new(2).unwrap();
        assert!((rule.nodes()[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let rule = GaussLegendre::new(3).unwrap();
        assert!((rule.nodes()[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((rule.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_of_polynomial_and_exponential() {
        let spec = QuadratureSpec::default();
        // int_0^2 int_0^y x y dx dy = int_0^2 y^3/2 dy = 2
        let est = integrate_triangle(|x, y| x * y, 0.0, 2.0, |_, _| {}, &spec).unwrap();
        assert!((est.value - 2.0).abs() < 1e-12);
        // int_1^3 int_0^y exp(-x) dx dy = 2 - (e^-1 - e^-3)
        let exact = 2.0 - ((-1.0f64).exp() - (-3.0f64).exp());
        let est =
            integrate_triangle(|x, _| (-x).exp(), 1.0, 3.0, |y, b| b.push(y / 2.0), &spec).unwrap();
        assert!((est.value - exact).abs() < 1e-12);
        assert!(est.relative_error <= spec.tolerance);
    }

    #[test]
    fn failure_when_cap_too_low() {
        let spec = QuadratureSpec {
            order: 2,
            tolerance: 1e-14,
            max_refinements: 1,
        };
        let err =
            integrate_triangle(|x, y| (x * y).sin().exp(), 0.0, 5.0, |_, _| {}, &spec).unwrap_err();
        assert!(matches!(err, Error::QuadratureFailure { .. }));
    }

    #[test]
    fn zero_integrand_converges() {
        let est = integrate_triangle(|_, _| 0.0, 1.0, 4.0, |_, _| {}, &QuadratureSpec::default())
            .unwrap();
        assert_eq!(est.value, 0.0);
    }
}
