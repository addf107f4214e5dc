//! Quadrature for `∫ F(v(s)) e^{-2s} ds` on a uniform grid.
//!
//! The weight `e^{-2s}` is integrated exactly. Where `ln F` changes slowly
//! from node to node, `F` is interpolated by piecewise quadratics (product
//! Simpson) or, on an unpaired last cell, linearly. Cells where `ln F` jumps
//! are split into sub-cells on which `v` is linear and `F(v)·e^{-2s}` is
//! integrated by Simpson's rule, which keeps coarse grids of steep
//! exponential integrands accurate. Beyond the last node `F` is continued as a constant.

/// An integrand `F(v)` given through its logarithm.
pub trait LogIntegrand {
    /// `ln F(v)`; `-∞` where `F` vanishes, `+∞` where it is not representable.
    fn ln_f(&self, v: f64) -> f64;

    /// A cheap upper bound for `ln F(v)`, used to skip negligible cells.
    fn ln_f_upper(&self, v: f64) -> f64 {
        self.ln_f(v)
    }
}

/// `F(v) = |v|^q`.
#[derive(Debug, Clone, Copy)]
pub struct Power(pub f64);

impl LogIntegrand for Power {
    #[inline]
    fn ln_f(&self, v: f64) -> f64 {
        if v == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.0 * v.abs().ln()
        }
    }
}

/// Largest `|Δ ln F|` across a cell for node-based interpolation.
const RESOLVED: f64 = 0.25;
/// Target `|Δ ln F|` per sub-cell.
const SUB_STEP: f64 = 0.02;
const MAX_SUB: f64 = (1u64 << 22) as f64;
/// Below `e^{-745}` a contribution is treated as zero.
const NEGLIGIBLE: f64 = -745.0;

/// `∫_0^len t^m e^{-c t} dt` for `m = 0, 1, 2`.
fn moments(c: f64, len: f64) -> [f64; 3] {
    if c * len <= 2.0 {
        let mut out = [0.0; 3];
        for (m, slot) in out.iter_mut().enumerate() {
            let mut sum = 0.0;
            let mut coef = 1.0;
            for k in 0..60 {
                let e = (m + k + 1) as f64;
                let term = coef * len.powf(e) / e;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
                coef *= -c / (k + 1) as f64;
            }
            *slot = sum;
        }
        out
    } else {
        let tail = (-c * len).exp();
        let m0 = (1.0 - tail) / c;
        let m1 = (m0 - len * tail) / c;
        let m2 = (2.0 * m1 - len * len * tail) / c;
        [m0, m1, m2]
    }
}

/// Product weights relative to the pre-weighted samples `F_i e^{-2 s_i}`.
#[derive(Debug, Clone, Copy)]
struct Weights {
    simpson: bool,
    ta: f64,
    tb: f64,
    w0: f64,
    w1: f64,
    w2: f64,
}

impl Weights {
    fn new(h: f64) -> Self {
        let c = 2.0 * h;
        let t = moments(c, 1.0);
        let ta = h * (t[0] - t[1]);
        let tb = h * t[1] * c.exp();
        let m = moments(c, 2.0);
        let w0 = h * (m[2] - 3.0 * m[1] + 2.0 * m[0]) / 2.0;
        let w1 = h * (2.0 * m[1] - m[2]) * c.exp();
        let w2 = h * (m[2] - m[1]) / 2.0 * (2.0 * c).exp();
        let simpson = h <= 0.25 && w0 > 0.0 && w1 > 0.0 && w2 > 0.0;
        Weights { simpson, ta, tb, w0, w1, w2 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    s: f64,
    v: f64,
    /// `ln F(v)`, NaN while only the upper bound has been checked
    lnf: f64,
    dead: bool,
}

impl Node {
    #[inline]
    fn weighted_log(&self) -> f64 {
        self.lnf - 2.0 * self.s
    }
}

struct Cursor<'a, F: LogIntegrand> {
    s_min: f64,
    ds: f64,
    values: &'a [f64],
    f: &'a F,
}

impl<'a, F: LogIntegrand> Cursor<'a, F> {
    #[inline]
    fn node(&self, i: usize) -> Node {
        let s = self.s_min + i as f64 * self.ds;
        let v = self.values[i];
        if self.f.ln_f_upper(v) - 2.0 * s < NEGLIGIBLE {
            Node { s, v, lnf: f64::NAN, dead: true }
        } else {
            Node { s, v, lnf: self.f.ln_f(v), dead: false }
        }
    }

    #[inline]
    fn force(&self, n: &mut Node) {
        if n.lnf.is_nan() {
            n.lnf = self.f.ln_f(n.v);
        }
    }

    /// Node-based interpolation is used where `F ≤ 1` at both ends, so that
    /// `F` is polynomial-like in `v`, or where `ln F` varies slowly.
    fn resolved(a: &Node, b: &Node) -> bool {
        if a.lnf <= 0.0 && b.lnf <= 0.0 {
            return true;
        }
        a.lnf.is_finite() && b.lnf.is_finite() && (b.lnf - a.lnf).abs() <= RESOLVED
    }

    /// Cell split into Simpson sub-cells with `v` linear.
    fn adaptive(&self, a: &Node, b: &Node) -> f64 {
        let pos = |x: f64| if x.is_finite() { x.max(0.0) } else { 0.0 };
        let jump = if a.lnf.is_finite() && b.lnf.is_finite() && a.v * b.v > 0.0 {
            (b.lnf - a.lnf).abs()
        } else {
            pos(a.lnf).max(pos(b.lnf)) + 1.0
        };
        let m = (jump / SUB_STEP).ceil().clamp(4.0, MAX_SUB) as usize;
        let h = self.ds / m as f64;
        let dv = (b.v - a.v) / m as f64;
        let g = |k: f64| exp_or_zero(self.f.ln_f(a.v + k * dv) - 2.0 * (a.s + k * h));
        let mut sum = 0.0;
        let mut g0 = exp_or_zero(a.weighted_log());
        for k in 1..=m {
            let g1 = if k == m { exp_or_zero(b.weighted_log()) } else { g(k as f64) };
            sum += h / 6.0 * (g0 + 4.0 * g(k as f64 - 0.5) + g1);
            g0 = g1;
        }
        sum
    }

    fn cell(&self, w: &Weights, a: &mut Node, b: &mut Node) -> f64 {
        if a.dead && b.dead {
            return 0.0;
        }
        self.force(a);
        self.force(b);
        if Self::resolved(a, b) {
            w.ta * exp_or_zero(a.weighted_log()) + w.tb * exp_or_zero(b.weighted_log())
        } else {
            self.adaptive(a, b)
        }
    }
}

#[inline]
fn exp_or_zero(l: f64) -> f64 {
    if l == f64::NEG_INFINITY {
        0.0
    } else {
        l.exp()
    }
}

/// Neumaier-compensated accumulator.
#[derive(Default)]
struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `∫ F(v(s)) e^{-2s} ds` for samples `values[i] = v(s_min + i·ds)`, with
/// `v` continued as a constant past the last node. Returns `+∞` as soon as
/// a contribution overflows.
pub fn integrate<F: LogIntegrand>(s_min: f64, ds: f64, values: &[f64], f: &F) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let cur = Cursor { s_min, ds, values, f };
    let w = Weights::new(ds);
    let mut total = Sum::default();
    let mut a = cur.node(0);
    let mut i = 0;
    while i + 1 < n {
        let contribution;
        if w.simpson && i + 2 < n {
            let mut b = cur.node(i + 1);
            let mut c = cur.node(i + 2);
            if a.dead && b.dead && c.dead {
                contribution = 0.0;
            } else {
                cur.force(&mut a);
                cur.force(&mut b);
                cur.force(&mut c);
                contribution = if Cursor::<F>::resolved(&a, &b) && Cursor::<F>::resolved(&b, &c) {
                    w.w0 * exp_or_zero(a.weighted_log())
                        + w.w1 * exp_or_zero(b.weighted_log())
                        + w.w2 * exp_or_zero(c.weighted_log())
                } else {
                    cur.cell(&w, &mut a, &mut b) + cur.cell(&w, &mut b, &mut c)
                };
            }
            a = c;
            i += 2;
        } else {
            let mut b = cur.node(i + 1);
            contribution = cur.cell(&w, &mut a, &mut b);
            a = b;
            i += 1;
        }
        if !contribution.is_finite() {
            return f64::INFINITY;
        }
        total.add(contribution);
    }
    if !a.dead {
        cur.force(&mut a);
        let tail = 0.5 * exp_or_zero(a.weighted_log());
        if !tail.is_finite() {
            return f64::INFINITY;
        }
        total.add(tail);
    }
    total.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Exp;
    impl LogIntegrand for Exp {
        fn ln_f(&self, v: f64) -> f64 {
            v
        }
    }

    struct ShiftedSine;
    impl LogIntegrand for ShiftedSine {
        fn ln_f(&self, v: f64) -> f64 {
            2.0 * (2.0 + v.sin()).ln()
        }
    }

    fn grid(s0: f64, h: f64, n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|i| f(s0 + i as f64 * h)).collect()
    }

    #[test]
    fn constant_on_half_line_is_exact() {
        for &(h, n) in &[(1.0 / 256.0, 1000), (0.1, 7), (3.0, 4), (0.01, 2)] {
            let v = integrate(0.0, h, &vec![1.0; n], &Power(2.0));
            assert!((v - 0.5).abs() < 1e-14, "h={h} n={n} v={v}");
        }
    }

    #[test]
    fn linear_ramp_then_constant_is_exact() {
        // F(v) = v with v(s) = s on [0,1], constant afterwards
        let h = 1.0 / 8.0;
        let vals = grid(0.0, h, 9, |s| s);
        let v = integrate(0.0, h, &vals, &Power(1.0));
        let exact = (1.0 - 3.0 * (-2.0f64).exp()) / 4.0 + (-2.0f64).exp() / 2.0;
        assert!((v - exact).abs() < 1e-6, "{v} {exact}");
    }

    #[test]
    fn smooth_integrand_converges_fourth_order() {
        let exact = {
            let f = |s: f64| (2.0 + s.sin()).powi(2) * (-2.0 * s).exp();
            let m = 200_000;
            let hh = 2.0 / m as f64;
            let mut acc = f(1.0) + f(3.0);
            for i in 1..m {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(1.0 + i as f64 * hh);
            }
            acc * hh / 3.0 + (2.0 + 3.0f64.sin()).powi(2) * (-6.0f64).exp() / 2.0
        };
        let run = |n: usize| {
            let h = 2.0 / (n - 1) as f64;
            integrate(1.0, h, &grid(1.0, h, n, |s| s), &ShiftedSine)
        };
        let e1 = (run(33) - exact).abs();
        let e2 = (run(65) - exact).abs();
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn steep_exponential_on_coarse_grid() {
        // F(v) = e^v with v = 3s on [0, 40], h = 10: ∫ e^{s} ds over [0,40]
        // plus the constant tail e^{120 - 80}/2
        let vals = grid(0.0, 10.0, 5, |s| 3.0 * s);
        let got = integrate(0.0, 10.0, &vals, &Exp);
        let exact = (40f64.exp() - 1.0) + 40f64.exp() / 2.0;
        assert!((got / exact - 1.0).abs() < 1e-9, "{got:e} {exact:e}");
    }

    #[test]
    fn overflow_is_reported_as_infinity() {
        let vals = vec![0.0, 800.0, 800.0];
        assert_eq!(integrate(0.0, 1.0, &vals, &Exp), f64::INFINITY);
    }

    #[test]
    fn negligible_cells_are_skipped() {
        let vals = vec![1.0; 10];
        assert_eq!(integrate(400.0, 1.0, &vals, &Power(2.0)), 0.0);
    }
}
