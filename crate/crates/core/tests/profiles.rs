use approx::assert_relative_eq;
use proptest::prelude::*;

use tmlab_core::orlicz::OrliczParams;
use tmlab_core::profiles::{
    bubble_sum, concentration_limit_norm, elementary_concentration, orthogonality_test, sum_norm_limit,
    ConcentrationTriplet, CoreDescriptor, GridPolicy, Orthogonality, ScaleDescriptor,
};
use tmlab_core::{luxemburg_norm, LabError, Profile};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn moser_bubble() -> ConcentrationTriplet {
    ConcentrationTriplet::centered(ScaleDescriptor::power(1.0, 1.0), Profile::moser(1.0, 1.0).unwrap())
}

fn moser_field(alpha: f64) -> tmlab_core::LogRadialField {
    elementary_concentration(&moser_bubble(), alpha, &GridPolicy::default()).unwrap()
}

/// `∫₀^∞ min(s,1)^q e^{−2αs} ds` by composite Simpson on [0, 1] plus the
/// exact tail.
fn moser_weighted_moment(alpha: f64, q: f64) -> f64 {
    let m = 1_000_000;
    let h = 1.0 / m as f64;
    let f = |s: f64| s.powf(q) * (-2.0 * alpha * s).exp();
    let mut acc = f(0.0) + f(1.0);
    for i in 1..m {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0 + (-2.0 * alpha).exp() / (2.0 * alpha)
}

#[test]
fn energy_is_scale_invariant() {
    let base = moser_field(10.0).grad_l2_norm_sq();
    assert_relative_eq!(base, 1.0, max_relative = 1e-10);
    for alpha in [30.0, 100.0, 300.0, 1000.0] {
        assert_relative_eq!(moser_field(alpha).grad_l2_norm_sq(), base, max_relative = 1e-10);
    }
}

#[test]
fn lq_identity_matches_independent_quadrature() {
    for alpha in [10.0, 30.0, 100.0, 300.0] {
        let g = moser_field(alpha);
        for q in [2.0, 4.0, 8.0] {
            let lhs = g.lq_norm_pow(q);
            let rhs =
                TWO_PI.powf(1.0 - q / 2.0) * alpha.powf(q / 2.0 + 1.0) * moser_weighted_moment(alpha, q);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
        }
    }
}

#[test]
fn lq_norms_vanish_monotonically() {
    let ladder = [10.0, 30.0, 100.0, 300.0];
    for q in [2.0, 4.0, 8.0] {
        let norms: Vec<f64> = ladder.iter().map(|&a| moser_field(a).lq_norm(q)).collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]), "q = {q}: {norms:?}");
    }
    let l4_10 = moser_field(10.0).lq_norm_pow(4.0);
    let l4_100 = moser_field(100.0).lq_norm_pow(4.0);
    assert!(l4_100 * 5.0 <= l4_10);
}

#[test]
fn limit_norm_values() {
    let p = Profile::moser(3.0, 1.0).unwrap();
    assert_relative_eq!(concentration_limit_norm(&p), 0.282_094_791_773_878_14, max_relative = 1e-12);
    assert_relative_eq!(
        concentration_limit_norm(&p.scaled(0.4)),
        0.4 * concentration_limit_norm(&p),
        max_relative = 1e-14
    );
}

#[test]
fn luxemburg_norm_approaches_limit_monotonically() {
    let limit = concentration_limit_norm(&Profile::moser(1.0, 1.0).unwrap());
    let params = OrliczParams::default();
    let gaps: Vec<f64> = [10.0, 30.0, 100.0, 300.0]
        .iter()
        .map(|&a| (luxemburg_norm(&moser_field(a), &params).unwrap() - limit).abs())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn profiles_satisfy_structural_checks() {
    for (a, amp) in [(0.5, 1.0), (1.0, 0.7), (1.2, 2.0)] {
        let p = Profile::moser(a, amp).unwrap();
        let report = p.report();
        assert!(report.ok(), "{report:?}");
    }
}

#[test]
fn orthogonality_verdicts() {
    let psi = Profile::moser(1.0, 1.0).unwrap();
    let ns = [10.0, 30.0, 100.0, 300.0, 1000.0];
    let t1 = ConcentrationTriplet::centered(ScaleDescriptor::power(1.0, 1.0), psi.clone());
    let t3 = ConcentrationTriplet::centered(ScaleDescriptor::power(1.0, 3.0), psi.clone());
    assert_eq!(orthogonality_test(&t1, &t3, &ns), Orthogonality::OrthogonalByScale);
    assert_eq!(orthogonality_test(&t1, &t1.clone(), &ns), Orthogonality::Same);

    // ψ̃ vanishes on [0, 2), cores at distance e^{−2n}
    let shifted = Profile::from_fn(128.0, 1.0 / 512.0, |s| (s - 2.0).clamp(0.0, 1.0)).unwrap();
    let t_core = ConcentrationTriplet {
        scale: ScaleDescriptor::power(1.0, 1.0),
        core: CoreDescriptor::Exponential { direction: [1.0, 0.0], rate: 2.0 },
        profile: shifted,
    };
    match orthogonality_test(&t1, &t_core, &ns) {
        Orthogonality::OrthogonalByCore { a } => assert_relative_eq!(a, 2.0, max_relative = 1e-9),
        other => panic!("{other:?}"),
    }
    // same scale and cores at distance e^{−2n} but no vanishing profile
    let t_bad = ConcentrationTriplet { profile: psi, ..t_core };
    assert_eq!(orthogonality_test(&t1, &t_bad, &ns), Orthogonality::Undetermined);
}

#[test]
fn sum_norm_limit_special_cases() {
    let params = OrliczParams::default();
    let policy = GridPolicy::default();
    let single = sum_norm_limit(&[moser_bubble()], 100.0, &params, &policy).unwrap();
    let direct = luxemburg_norm(&moser_field(100.0), &params).unwrap();
    assert_relative_eq!(single, direct, max_relative = 1e-12);

    // profiles (1, 0.5): the larger bubble sets the limit
    let big = Profile::moser(1.0, 1.0).unwrap();
    let small = big.scaled(0.5);
    let ts = [
        ConcentrationTriplet::centered(ScaleDescriptor::power(1.0, 1.0), big.clone()),
        ConcentrationTriplet::centered(ScaleDescriptor::power(1.0, 3.0), small),
    ];
    let value = sum_norm_limit(&ts, 30.0, &params, &GridPolicy::with_ds(30.0 / 4096.0)).unwrap();
    let limit = concentration_limit_norm(&big);
    assert!((value - limit).abs() <= 0.05 * limit, "{value} vs {limit}");
}

#[test]
fn grid_budget_is_enforced() {
    let p = Profile::moser(1.0, 1.0).unwrap();
    let policy = GridPolicy { max_samples: 1000, ..GridPolicy::default() };
    assert!(matches!(bubble_sum(&[(&p, 1e6)], &policy), Err(LabError::GridBudget { .. })));
}

#[test]
fn descriptors_round_trip_through_json() {
    let s = ScaleDescriptor::Geometric { c: 2.0, beta: 1.5 };
    let text = serde_json::to_string(&s).unwrap();
    assert_eq!(text, r#"{"form":"geometric","c":2.0,"beta":1.5}"#);
    assert_eq!(serde_json::from_str::<ScaleDescriptor>(&text).unwrap(), s);
    let c = CoreDescriptor::Fixed([0.5, -1.0]);
    assert_eq!(serde_json::from_str::<CoreDescriptor>(&serde_json::to_string(&c).unwrap()).unwrap(), c);
}

#[test]
fn profile_csv_round_trip() {
    let p = Profile::moser(1.5, 0.8).unwrap();
    let mut buf = Vec::new();
    p.write_csv(&mut buf).unwrap();
    let q = Profile::read_csv(buf.as_slice()).unwrap();
    assert_eq!(p.samples(), q.samples());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn holder_half_bound_holds(knee in 0.1f64..10.0, amp in -3.0f64..3.0, wiggle in 0.0f64..0.5) {
        let p = Profile::from_fn(64.0, 1.0 / 64.0, |s| {
            amp * (s.min(knee) / knee.sqrt() + wiggle * (s.min(knee) * 3.0).sin() * s.min(1.0))
        })
        .unwrap();
        prop_assert!(p.report().holder_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn limit_norm_is_homogeneous(c in -5.0f64..5.0) {
        let p = Profile::moser(2.0, 1.0).unwrap();
        let want = c.abs() * concentration_limit_norm(&p);
        prop_assert!((concentration_limit_norm(&p.scaled(c)) - want).abs() <= 1e-13 * want.max(1.0));
    }
}
