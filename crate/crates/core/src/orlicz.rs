//! The Young function `φ_p`, Luxemburg norms and Trudinger–Moser functionals.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::LogRadialField;
use crate::fixtures::RadialShape;
use crate::quadrature::LogIntegrand;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Largest admissible `s²` for [`phi_p`].
pub const EXP_GUARD: f64 = 700.0;

/// Below this `|s|` the tail series is summed instead of `e^{s²}` minus the
/// Taylor polynomial.
const SERIES_SWITCH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrliczParams {
    pub p: u32,
    pub kappa: f64,
    pub alpha: f64,
}

impl OrliczParams {
    pub fn new(p: u32, kappa: f64) -> Self {
        OrliczParams { p, kappa, alpha: FOUR_PI }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(LabError::InvalidArgument(format!("p = {} < 1", self.p)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(LabError::InvalidArgument(format!("kappa = {}", self.kappa)));
        }
        if !(self.alpha >= 0.0) {
            return Err(LabError::InvalidArgument(format!("alpha = {}", self.alpha)));
        }
        Ok(())
    }
}

impl Default for OrliczParams {
    fn default() -> Self {
        OrliczParams::new(1, 1.0)
    }
}

/// Bracketing and tolerance settings for the Luxemburg bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub rel_tol: f64,
    pub max_doublings: u32,
}

impl Default for Bisection {
    fn default() -> Self {
        Bisection { rel_tol: 1e-10, max_doublings: 120 }
    }
}

/// `e^{x} − Σ_{k<p} x^k/k!` for `x ≥ 0`, no overflow guard.
pub(crate) fn exp_tail(x: f64, p: u32) -> f64 {
    if x <= SERIES_SWITCH * SERIES_SWITCH {
        tail_series(x, p)
    } else {
        tail_direct(x, p)
    }
}

/// `Σ_{k≥p} x^k / k!`
fn tail_series(x: f64, p: u32) -> f64 {
    let mut term = 1.0;
    for k in 1..=p {
        term *= x / k as f64;
    }
    let mut sum = term;
    let mut k = p;
    loop {
        k += 1;
        term *= x / k as f64;
        if term < 1e-17 * sum || term == 0.0 {
            break;
        }
        sum += term;
    }
    sum
}

/// `e^x` minus a compensated partial sum.
fn tail_direct(x: f64, p: u32) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut term = 1.0;
    for k in 0..p {
        if k > 0 {
            term *= x / k as f64;
        }
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    (x.exp() - sum).max(0.0)
}

/// `φ_p(s) = e^{s²} − Σ_{k<p} s^{2k}/k!`.
pub fn phi_p(s: f64, p: u32) -> Result<f64> {
    if p < 1 {
        return Err(LabError::InvalidArgument(format!("p = {p} < 1")));
    }
    if !s.is_finite() {
        return Err(LabError::InvalidArgument(format!("s = {s}")));
    }
    let x = s * s;
    if x > EXP_GUARD {
        return Err(LabError::Overflow { arg: "s", value: s });
    }
    Ok(exp_tail(x, p))
}

/// `F(v) = φ_p(c·v)`, evaluated in log space.
#[derive(Debug, Clone, Copy)]
pub struct Phi {
    pub p: u32,
    pub scale: f64,
}

/// `ln φ_p(x)` for any finite `x`.
pub fn ln_phi(x: f64, p: u32) -> f64 {
    let x2 = x * x;
    if x2 == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x2 > 40.0 + 4.0 * p as f64 {
        let mut term = 1.0;
        let mut poly = 1.0;
        for k in 1..p {
            term *= x2 / k as f64;
            poly += term;
        }
        return x2 + (-(-x2).exp() * poly).ln_1p();
    }
    exp_tail(x2, p).ln()
}

impl LogIntegrand for Phi {
    #[inline]
    fn ln_f(&self, v: f64) -> f64 {
        ln_phi(self.scale * v, self.p)
    }

    #[inline]
    fn ln_f_upper(&self, v: f64) -> f64 {
        let x = self.scale * v;
        x * x
    }
}

/// `G(λ) = ∫ φ_p(|u|/λ) dx`.
pub fn orlicz_integral(u: &LogRadialField, p: u32, lambda: f64) -> f64 {
    u.integral(&Phi { p, scale: 1.0 / lambda })
}

/// Luxemburg norm with default bisection settings.
pub fn luxemburg_norm(u: &LogRadialField, params: &OrliczParams) -> Result<f64> {
    luxemburg_norm_with(u, params, &Bisection::default())
}

/// `inf{λ > 0 : ∫ φ_p(|u|/λ) dx ≤ κ}` by bracketed bisection.
pub fn luxemburg_norm_with(u: &LogRadialField, params: &OrliczParams, bis: &Bisection) -> Result<f64> {
    params.validate()?;
    if u.is_zero() {
        return Ok(0.0);
    }
    luxemburg_root(|lambda| orlicz_integral(u, params.p, lambda), params.kappa, u.h1_norm(), bis)
}

/// Smallest `λ` with `g(λ) ≤ κ` for a non-increasing `g`, bracketed from
/// `2‖u‖_{H¹}/√(4π) + 1`.
pub fn luxemburg_root(g: impl Fn(f64) -> f64, kappa: f64, h1_norm: f64, bis: &Bisection) -> Result<f64> {
    let mut hi = 2.0 * h1_norm / FOUR_PI.sqrt() + 1.0;
    let mut steps = 0;
    while g(hi) > kappa {
        hi *= 2.0;
        steps += 1;
        if steps > bis.max_doublings {
            return Err(LabError::NonConvergence { iterations: steps });
        }
    }
    let mut lo = 0.5 * hi;
    while g(lo) <= kappa {
        hi = lo;
        lo *= 0.5;
        steps += 1;
        if steps > bis.max_doublings {
            return Err(LabError::NonConvergence { iterations: steps });
        }
    }
    while hi - lo > bis.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= kappa {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `∫ (e^{α|u|²} − Σ_{k<p} α^k|u|^{2k}/k!) dx`.
pub fn tm_functional(u: &LogRadialField, alpha: f64, p: u32) -> Result<f64> {
    if p < 1 {
        return Err(LabError::InvalidArgument(format!("p = {p} < 1")));
    }
    if !(alpha >= 0.0) {
        return Err(LabError::InvalidArgument(format!("alpha = {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let ra = alpha.sqrt();
    let peak = u.sup_norm() * ra;
    if peak * peak > EXP_GUARD {
        return Err(LabError::Overflow { arg: "sqrt(alpha)|u|", value: peak });
    }
    Ok(u.integral(&Phi { p, scale: ra }))
}

/// A constant `c(α, p)` with
/// `∫(e^{α u²} − Σ_{k<p} α^k u^{2k}/k!) dx ≤ c(α,p) ‖u‖_{L^{2p}}^{2p}`
/// for radial non-increasing `u` with `‖∇u‖_{L²} ≤ 1`, `0 ≤ α < 4π`.
///
/// With `β = α/4π` it is `4^p π^p · max(β^p e^β / p!, inf_ε e^{β(1+1/ε)} / (1 − β(1+ε)))`.
pub fn tm_bound_constant(alpha: f64, p: u32) -> Result<f64> {
    if !(0.0..FOUR_PI).contains(&alpha) {
        return Err(LabError::InvalidArgument(format!("alpha = {alpha} outside [0, 4π)")));
    }
    if p < 1 {
        return Err(LabError::InvalidArgument(format!("p = {p} < 1")));
    }
    let beta = alpha / FOUR_PI;
    let factorial: f64 = (1..=p).map(|k| k as f64).product();
    let small = beta.powi(p as i32) * beta.exp() / factorial;
    let large = if beta == 0.0 {
        1.0
    } else {
        let eps_max = 1.0 / beta - 1.0;
        let f = |eps: f64| (beta * (1.0 + 1.0 / eps)).exp() / (1.0 - beta * (1.0 + eps));
        // log-convex in eps on (0, eps_max): golden-section search
        let (mut a, mut b) = (eps_max * 1e-9, eps_max * (1.0 - 1e-9));
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - gr * (b - a);
            let d = a + gr * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        f(0.5 * (a + b))
    };
    Ok(4f64.powi(p as i32) * std::f64::consts::PI.powi(p as i32) * small.max(large))
}

/// Result of [`calibrate_kappa`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaCalibration {
    /// Largest `∫(e^{4πu²} − 1) dx` found; a lower bound for the supremum.
    pub kappa: f64,
    pub lower_bound: bool,
    pub argmax_a: f64,
    pub argmax_radius: f64,
}

/// Maximizes `∫(e^{4πu²} − 1) dx` over Moser fields with knee `a` and outer
/// radius `R`, normalized to `‖u‖_{H¹} = 1`.
pub fn calibrate_kappa(a_list: &[f64], radii: &[f64], ds: f64) -> Result<KappaCalibration> {
    if a_list.is_empty() || radii.is_empty() {
        return Err(LabError::InvalidArgument("empty calibration grid".into()));
    }
    let mut best =
        KappaCalibration { kappa: 0.0, lower_bound: true, argmax_a: f64::NAN, argmax_radius: f64::NAN };
    for &a in a_list {
        for &radius in radii {
            let u = RadialShape::Moser { a, radius }.log_field(ds)?;
            let u = u.scaled(1.0 / u.h1_norm());
            let value = tm_functional(&u, FOUR_PI, 1)?;
            if value > best.kappa {
                best.kappa = value;
                best.argmax_a = a;
                best.argmax_radius = radius;
            }
        }
    }
    Ok(best)
}

/// Knee and radius grid used by default for [`calibrate_kappa`].
pub fn default_calibration_grid() -> (Vec<f64>, Vec<f64>) {
    let a = vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let radii = vec![0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0];
    (a, radii)
}
