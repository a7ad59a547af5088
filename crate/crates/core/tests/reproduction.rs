use brn_core::natural_history::TransmissionParams;
use brn_core::quadrature::{GaussLegendre, QuadratureSpec};
use brn_core::reproduction::{
    brn_from_integrals, evaluate, scale_transmission, sensitivity_sweep, sex_integral,
    sex_integral_estimate, single_sex_r0, PopulationConfig, Sex, SexProfile, SweepMode, Verdict,
};
use brn_core::survival::survival_density;

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn with_anchors(p: &SexProfile, hi: f64, lo: f64) -> SexProfile {
    p.with_transmission(TransmissionParams::new(hi, lo, p.viral()).unwrap())
        .unwrap()
}

/// Plain tensor Gauss-Legendre on a fine uniform mesh, without grading or
/// adaptivity; slow but structurally independent of the production rule.
fn brute_force_integral(p: &SexProfile, omega: f64) -> f64 {
    let rule = GaussLegendre::new(20).unwrap();
    let tau1 = p.viral().tau1;
    let survival = *p.survival();
    rule.integrate_panels(
        |y| {
            let inner = rule.integrate_panels(
                |x| p.activity_fraction(x, y).unwrap() * p.transmission_prob(x, y).unwrap(),
                0.0,
                y,
                ((y / 0.1).ceil() as usize).max(1),
            );
            survival_density(y, &survival) * inner
        },
        tau1,
        omega,
        390,
    )
}

#[test]
fn quadrature_matches_brute_force() {
    for sex in [Sex::Female, Sex::Male] {
        let p = SexProfile::baseline(sex);
        let j = sex_integral(&p, 40.0, &quad()).unwrap();
        let brute = brute_force_integral(&p, 40.0);
        assert!((j / brute - 1.0).abs() < 1e-5, "{sex}: {j} vs {brute}");
    }
}

#[test]
fn reported_error_within_tolerance() {
    let est = sex_integral_estimate(&SexProfile::baseline(Sex::Male), 40.0, &quad()).unwrap();
    assert!(est.relative_error <= quad().tolerance);
    assert!(est.refinements >= 1);
}

#[test]
fn integral_increases_with_anchors() {
    let base = SexProfile::baseline(Sex::Female);
    let j = |hi, lo| sex_integral(&with_anchors(&base, hi, lo), 40.0, &quad()).unwrap();
    let mut prev = 0.0;
    for hi in [0.002, 0.004, 0.008, 0.016] {
        let v = j(hi, 0.001);
        assert!(v > prev, "ptr_hi = {hi}");
        prev = v;
    }
    let mut prev = 0.0;
    for lo in [0.0002, 0.0005, 0.001, 0.004] {
        let v = j(0.008, lo);
        assert!(v > prev, "ptr_lo = {lo}");
        prev = v;
    }
}

#[test]
fn horizon_extension_is_negligible() {
    let base = PopulationConfig::baseline();
    let at40 = evaluate(&base, &quad()).unwrap();
    let at60 = evaluate(
        &PopulationConfig {
            omega: 60.0,
            ..base
        },
        &quad(),
    )
    .unwrap();
    assert!((at60.i0 / at40.i0 - 1.0).abs() < 1e-6);
}

#[test]
fn identical_profiles_are_symmetric() {
    let female = SexProfile::baseline(Sex::Female);
    let cfg = PopulationConfig::new(female, female.with_label(Sex::Male), 40.0).unwrap();
    let r = evaluate(&cfg, &quad()).unwrap();
    assert_eq!(r.r_fm, r.r_mf);
    let single = single_sex_r0(&female, 40.0, &quad()).unwrap();
    assert!((r.r0 / single - 1.0).abs() < 1e-14);
    assert!((r.i0 * r.integral_f - 1.0).abs() < 1e-12);
}

#[test]
fn vanishing_transmission_gives_vanishing_r0() {
    let cfg = scale_transmission(
        &PopulationConfig::baseline(),
        1e-12,
        SweepMode::ScaleFunction,
    )
    .unwrap();
    let r = evaluate(&cfg, &quad()).unwrap();
    assert!(r.r0 < 1e-10 && r.verdict == Verdict::Subcritical);
}

#[test]
fn pointwise_scaling_is_linear_in_inverse_i0() {
    let cfg = PopulationConfig::baseline();
    let pts = sensitivity_sweep(
        &cfg,
        &[1.0, 0.1, 0.7, 4.0],
        SweepMode::ScaleFunction,
        &quad(),
    )
    .unwrap();
    for p in &pts[1..] {
        assert!(
            (p.i0 * p.factor / pts[0].i0 - 1.0).abs() < 1e-9,
            "factor {}",
            p.factor
        );
    }
    let ends = sensitivity_sweep(&cfg, &[0.5, 2.0], SweepMode::ScaleEndpoints, &quad()).unwrap();
    for (e, f) in ends.iter().zip(&pts[1..]) {
        assert!(e.i0.is_finite() && f.i0.is_finite());
    }
    assert!(
        sensitivity_sweep(&cfg, &[], SweepMode::ScaleFunction, &quad())
            .unwrap()
            .is_empty()
    );
    assert!(sensitivity_sweep(&cfg, &[300.0], SweepMode::ScaleFunction, &quad()).is_err());
}

#[test]
fn predicate_agreement_on_grid() {
    let cfg = PopulationConfig::baseline();
    let r = evaluate(&cfg, &quad()).unwrap();
    for i in 0..20 {
        for j in 0..20 {
            let dm = 1.0 + 599.0 * i as f64 / 19.0;
            let df = 1.0 + 599.0 * j as f64 / 19.0;
            let v = brn_from_integrals(r.integral_f, r.integral_m, df, dm).unwrap();
            assert_eq!(v.r0 > 1.0, v.isa > v.i0, "({dm}, {df})");
            assert_eq!(v.epidemic, v.verdict == Verdict::Epidemic);
        }
    }
}

#[test]
fn balanced_populations() {
    let cfg = brn_core::config::parse_scenario(
        "[female]\ndelta = 208\n[population]\npop_female = 1\npop_male = 8\n",
    )
    .unwrap();
    let r = evaluate(&cfg.population, &cfg.quadrature).unwrap();
    assert_eq!(r.delta_m, 26.0);
    assert!((r.r0 - 0.90).abs() < 0.01);
}
