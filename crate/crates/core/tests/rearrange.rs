use proptest::prelude::*;

use tmlab_core::fixtures::{fixture_family, RadialShape};
use tmlab_core::orlicz::OrliczParams;
use tmlab_core::rearrange::{polya_szego_check, radial_level_measure, symmetric_decreasing_rearrangement};
use tmlab_core::{luxemburg_norm, Field2D};

fn materialize(shape: &RadialShape, center: [f64; 2]) -> Field2D {
    let rho = shape.support_radius();
    let half = 1.15 * rho + center[0].abs().max(center[1].abs());
    // resolve the flat core of Moser fields by several cells
    let feature = match *shape {
        RadialShape::Moser { a, radius } => radius * (-a).exp() / 8.0,
        _ => f64::INFINITY,
    };
    shape.field_2d(half, (rho / 120.0).min(feature), center).unwrap()
}

fn two_bumps(h: f64) -> Field2D {
    let b = RadialShape::SmoothBump { amp: 1.0, radius: 1.0 };
    Field2D::centered(3.5, h, |x, y| b.eval((x - 1.5).hypot(y)) + b.eval((x + 1.5).hypot(y))).unwrap()
}

#[test]
fn radial_input_is_reproduced() {
    let shape = RadialShape::Gaussian { amp: 1.0, sigma: 0.5 };
    let f = shape.field_2d(3.0, 0.01, [0.0, 0.0]).unwrap();
    let star = symmetric_decreasing_rearrangement(&f).unwrap();
    let exact = shape.log_field(1.0 / 256.0).unwrap();
    // L² distance on the radial profile, relative to the L² norm
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..2000 {
        let r = 2.5 * (k as f64 + 0.5) / 2000.0;
        let d = star.value_at_radius(r) - exact.value_at_radius(r);
        num += d * d * r;
        den += exact.value_at_radius(r).powi(2) * r;
    }
    assert!((num / den).sqrt() < 1e-3, "{}", (num / den).sqrt());
}

#[test]
fn translated_disk_rearranges_to_centered_disk() {
    let (a, rho, h) = (2.0, 0.8, 0.01);
    let f = Field2D::centered(2.0, h, |x, y| if (x - 0.6).hypot(y + 0.3) <= rho { a } else { 0.0 }).unwrap();
    let star = symmetric_decreasing_rearrangement(&f).unwrap();
    assert!((star.sup_norm() - a).abs() < 1e-12);
    let area = radial_level_measure(&star, 0.5 * a);
    let exact = std::f64::consts::PI * rho * rho;
    let bound = 2.0 * 2.0 * std::f64::consts::PI * rho * h;
    assert!((area - exact).abs() <= bound, "{area} vs {exact}");
}

#[test]
fn lq_norms_preserved_on_fixtures() {
    for shape in fixture_family() {
        let f = materialize(&shape, [0.0, 0.0]);
        let star = symmetric_decreasing_rearrangement(&f).unwrap();
        for q in [2.0, 4.0, 8.0] {
            let a = f.lq_norm_pow(q);
            let b = star.lq_norm_pow(q);
            assert!((a - b).abs() <= 1e-3 * a, "{shape:?} q = {q}: {a} {b}");
        }
    }
}

#[test]
fn two_bump_lq_norm_preserved() {
    let f = two_bumps(0.01);
    let star = symmetric_decreasing_rearrangement(&f).unwrap();
    let (a, b) = (f.lq_norm_pow(4.0), star.lq_norm_pow(4.0));
    assert!((a - b).abs() <= 1e-3 * a);
}

#[test]
fn equimeasurable_at_twenty_levels() {
    let f = two_bumps(0.02);
    let star = symmetric_decreasing_rearrangement(&f).unwrap();
    let top = star.sup_norm();
    for k in 1..=20 {
        let t = top * k as f64 / 21.0;
        let direct = f.level_measure(t);
        let radial = radial_level_measure(&star, t);
        let tol = f.level_boundary_cells(t) as f64 * f.cell_area();
        assert!((direct - radial).abs() <= tol, "t = {t}: {direct} {radial} tol {tol}");
    }
}

#[test]
fn polya_szego_equality_for_gaussians() {
    let shape = RadialShape::Gaussian { amp: 1.0, sigma: 0.5 };
    for center in [[0.0, 0.0], [0.37, -0.21]] {
        let f = shape.field_2d(3.0, 0.01, center).unwrap();
        let (grad_in, grad_out) = polya_szego_check(&f).unwrap();
        let ratio = grad_out / grad_in;
        assert!((ratio - 1.0).abs() <= 1e-2, "{center:?}: {ratio}");
    }
}

#[test]
fn polya_szego_on_fixtures_and_strict_for_two_bumps() {
    for shape in fixture_family() {
        let (grad_in, grad_out) = polya_szego_check(&materialize(&shape, [0.0, 0.0])).unwrap();
        assert!(grad_out <= 1.01 * grad_in, "{shape:?}: {}", grad_out / grad_in);
    }
    let (grad_in, grad_out) = polya_szego_check(&two_bumps(0.01)).unwrap();
    assert!(grad_out < 0.99 * grad_in, "{}", grad_out / grad_in);
}

#[test]
fn orlicz_norm_preserved() {
    let params = OrliczParams::new(1, 1.0);
    for shape in [RadialShape::Gaussian { amp: 1.0, sigma: 0.5 }, RadialShape::Bump { amp: 0.8, radius: 1.0 }]
    {
        let f = materialize(&shape, [0.2, 0.1]);
        let star = symmetric_decreasing_rearrangement(&f).unwrap();
        let a = f.luxemburg_norm(&params).unwrap();
        let b = luxemburg_norm(&star, &params).unwrap();
        assert!((a - b).abs() <= 1e-2 * a, "{shape:?}: {a} {b}");
    }
}

#[test]
fn zero_field_rearranges_to_zero() {
    let f = Field2D::centered(1.0, 0.1, |_, _| 0.0).unwrap();
    assert!(symmetric_decreasing_rearrangement(&f).unwrap().is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn output_is_non_increasing_and_bounded(seed in any::<u64>()) {
        // splitmix64 of the cell coordinates
        let noise = |x: f64, y: f64| {
            let mut z = seed
                ^ ((x * 1e4).round() as i64 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
                ^ ((y * 1e4).round() as i64 as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64
        };
        let f = Field2D::centered(1.0, 0.1, |x, y| {
            if x.abs() > 0.95 || y.abs() > 0.95 { 0.0 } else { noise(x, y) - 0.5 }
        })
        .unwrap();
        let star = symmetric_decreasing_rearrangement(&f).unwrap();
        let v = star.values();
        prop_assert!(v.windows(2).all(|w| w[1] >= w[0]));
        let max = f.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!((star.sup_norm() - max).abs() < 1e-15);
    }
}
