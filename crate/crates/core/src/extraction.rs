//! Constructive profile decomposition for radial sequences and the 2D core
//! finder.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::LogRadialField;
use crate::orlicz::{luxemburg_norm, OrliczParams};
use crate::profiles::{
    bubble_value, orthogonality_test, ConcentrationTriplet, Orthogonality, Profile, ScaleDescriptor,
    DEFAULT_DSIG, DEFAULT_S_MAX,
};
use crate::rearrange::Field2D;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Default index ladder for asymptotic estimates.
pub const DEFAULT_N_LIST: [f64; 5] = [10.0, 30.0, 100.0, 300.0, 1000.0];

/// Finite sample of a sequence `(u_n)` with cached Luxemburg norms.
#[derive(Debug, Clone)]
pub struct FunctionSequence {
    n_list: Vec<f64>,
    fields: Vec<LogRadialField>,
    lux: Vec<f64>,
    params: OrliczParams,
}

impl FunctionSequence {
    pub fn from_evaluator(
        n_list: &[f64],
        params: OrliczParams,
        eval: impl Fn(f64) -> Result<LogRadialField>,
    ) -> Result<Self> {
        let fields = n_list.iter().map(|&n| eval(n)).collect::<Result<Vec<_>>>()?;
        Self::from_fields(n_list, params, fields)
    }

    pub fn from_fields(n_list: &[f64], params: OrliczParams, fields: Vec<LogRadialField>) -> Result<Self> {
        if n_list.len() < 2 || n_list.len() != fields.len() {
            return Err(LabError::InvalidArgument(
                "a sequence needs at least two indices, one field each".into(),
            ));
        }
        if n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidArgument("n_list must be increasing".into()));
        }
        let lux = fields.iter().map(|f| luxemburg_norm(f, &params)).collect::<Result<_>>()?;
        Ok(FunctionSequence { n_list: n_list.to_vec(), fields, lux, params })
    }

    pub fn n_list(&self) -> &[f64] {
        &self.n_list
    }

    pub fn fields(&self) -> &[LogRadialField] {
        &self.fields
    }

    pub fn luxemburg_norms(&self) -> &[f64] {
        &self.lux
    }

    pub fn params(&self) -> &OrliczParams {
        &self.params
    }

    /// Tail supremum of the Luxemburg norms over the upper half of `n_list`.
    pub fn a0_estimate(&self) -> f64 {
        tail_sup(&self.lux)
    }

    /// Luxemburg norms of `u_n` restricted to `|x| > R`.
    pub fn tail_norms(&self, radius: f64) -> Result<Vec<f64>> {
        let cut = -radius.ln();
        self.fields
            .iter()
            .map(|f| {
                let mut g = f.clone();
                let s_min = g.s_min();
                let ds = g.ds();
                for (i, v) in g.values_mut().iter_mut().enumerate() {
                    if s_min + i as f64 * ds > cut {
                        *v = 0.0;
                    }
                }
                luxemburg_norm(&g, &self.params)
            })
            .collect()
    }
}

fn tail_sup(values: &[f64]) -> f64 {
    let start = values.len() / 2;
    values[start..].iter().cloned().fold(0.0, f64::max)
}

/// Empirical constant of the radial decay estimate
/// `|u(r)| ≤ C r^{-1/(p+1)} ‖u‖_{L^{2p}}^{p/(p+1)} ‖∇u‖^{1/(p+1)}`.
pub fn radial_decay_bound(u: &LogRadialField, p: u32) -> f64 {
    let pf = p as f64;
    let lq = u.lq_norm(2.0 * pf);
    let grad = u.grad_l2_norm_sq().sqrt();
    if !(lq > 1e-300 && grad > 1e-300) {
        return 0.0;
    }
    let denom = lq.powf(pf / (pf + 1.0)) * grad.powf(1.0 / (pf + 1.0));
    let mut best: f64 = 0.0;
    for (i, v) in u.values().iter().enumerate() {
        best = best.max(v.abs() * (-u.s(i) / (pf + 1.0)).exp());
    }
    best / denom
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSelection {
    pub alpha: f64,
    pub objective: f64,
    pub value_at_alpha: f64,
    /// `(A0/2)√α ≤ |v(α)|`
    pub sandwich_ok: bool,
    /// Another maximizer within tolerance, separated from the chosen one.
    pub tie: bool,
}

/// Maximizes `4|v(s)/A0|² − s` over grid nodes with `s ≥ 0`.
pub fn select_scale(u: &LogRadialField, a0: f64, delta: f64) -> Result<ScaleSelection> {
    if !(a0 > 0.0 && delta > 0.0 && delta < a0) {
        return Err(LabError::InvalidArgument(format!("need 0 < delta < A0, got {delta}, {a0}")));
    }
    let start = (0..u.len()).find(|&i| u.s(i) >= -1e-9 * u.ds());
    let Some(start) = start else {
        return Err(LabError::Degenerate("grid has no node with s ≥ 0".into()));
    };
    let inv = 4.0 / (a0 * a0);
    let obj = |i: usize| inv * u.values()[i].powi(2) - u.s(i);
    let base = obj(start);
    let mut best = f64::NEG_INFINITY;
    let mut best_i = start;
    for i in start..u.len() {
        let o = obj(i);
        if o >= best {
            best = o;
            best_i = i;
        }
    }
    let tol = 1e-9 * best.abs().max(1.0);
    if best <= base + tol {
        return Err(LabError::Degenerate("selection objective never exceeds its value at s = 0".into()));
    }
    let first_near = (start..u.len()).find(|&i| obj(i) >= best - tol).unwrap();
    let alpha = u.s(best_i);
    let v = u.values()[best_i];
    Ok(ScaleSelection {
        alpha,
        objective: best,
        value_at_alpha: v,
        sandwich_ok: 0.5 * a0 * alpha.sqrt() <= v.abs(),
        tie: best_i - first_near > 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredProfile {
    pub profile: Profile,
    /// `‖ψ'_{n_last} − ψ'_{n_prev}‖_{L²}`
    pub cauchy_distance: f64,
    pub derivative_norm: f64,
    pub non_converged: bool,
    /// `‖ψ'‖ ≥ √(π/2)·A0·0.85`, when `A0` was supplied.
    pub lower_bound_ok: Option<bool>,
}

/// Tolerance on the profile lower bound.
pub const PROFILE_BOUND_SLACK: f64 = 0.15;

fn rescaled_profile(u: &LogRadialField, alpha: f64, s_max: f64, dsig: f64) -> Result<Profile> {
    let c = (TWO_PI / alpha).sqrt();
    let n = (s_max / dsig).round() as usize;
    let mut psi: Vec<f64> = (0..=n).map(|k| c * u.value_at(alpha * k as f64 * dsig)).collect();
    psi[0] = 0.0;
    Profile::new(dsig, psi)
}

/// `ψ_n(y) = √(2π/α_n) v_n(α_n y)` at the largest index, with a two-point
/// Cauchy check against the previous index.
pub fn recover_profile(
    fields: &[LogRadialField],
    scales: &[f64],
    a0: Option<f64>,
    s_max: f64,
    dsig: f64,
) -> Result<RecoveredProfile> {
    if fields.len() < 2 || fields.len() != scales.len() {
        return Err(LabError::InvalidArgument("need two fields with one scale each".into()));
    }
    if scales.iter().any(|a| !(*a > 0.0)) {
        return Err(LabError::InvalidArgument("scales must be positive".into()));
    }
    let k = fields.len();
    let last = rescaled_profile(&fields[k - 1], scales[k - 1], s_max, dsig)?;
    let prev = rescaled_profile(&fields[k - 2], scales[k - 2], s_max, dsig)?;
    let dist = last.derivative_distance(&prev);
    let norm = last.derivative_norm_sq().sqrt();
    let lower_bound_ok =
        a0.map(|a| norm >= (std::f64::consts::PI / 2.0).sqrt() * a * (1.0 - PROFILE_BOUND_SLACK));
    Ok(RecoveredProfile {
        profile: last,
        cauchy_distance: dist,
        derivative_norm: norm,
        non_converged: norm == 0.0 || dist > 0.2 * norm,
        lower_bound_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub grad_total: f64,
    pub grad_profiles: f64,
    pub grad_residual: f64,
}

impl Stability {
    pub fn defect(&self) -> f64 {
        (self.grad_total - self.grad_profiles - self.grad_residual).abs() / self.grad_total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "kebab-case")]
pub enum Termination {
    ResidualBelowEps,
    MaxLevels,
    EnergyExhausted,
    Degenerate(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub selections: Vec<ScaleSelection>,
    pub recovery: RecoveredProfile,
    /// Power-law fit of the selected scales.
    pub scale_fit: ScaleDescriptor,
    /// Residual norm after subtracting this level.
    pub residual_orlicz: f64,
    pub stability: Stability,
}

impl Level {
    pub fn scales(&self) -> Vec<f64> {
        self.selections.iter().map(|s| s.alpha).collect()
    }

    pub fn triplet(&self) -> ConcentrationTriplet {
        ConcentrationTriplet::centered(self.scale_fit, self.recovery.profile.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub n_list: Vec<f64>,
    pub levels: Vec<Level>,
    /// `A_0, A_1, …`
    pub residual_orlicz: Vec<f64>,
    pub termination: Termination,
}

impl DecompositionResult {
    pub fn triplets(&self) -> Vec<ConcentrationTriplet> {
        self.levels.iter().map(Level::triplet).collect()
    }

    /// Verdicts for consecutive extracted triplets.
    pub fn consecutive_orthogonality(&self) -> Vec<Orthogonality> {
        let t = self.triplets();
        t.windows(2).map(|w| orthogonality_test(&w[0], &w[1], &self.n_list)).collect()
    }

    /// Largest stability defect across levels.
    pub fn max_defect(&self) -> f64 {
        self.levels.iter().map(|l| l.stability.defect()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    pub eps_stop: f64,
    pub max_levels: usize,
    pub profile_s_max: f64,
    pub dsig: f64,
    /// Selected scales must grow by this factor across `n_list`.
    pub min_scale_growth: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            eps_stop: 0.05,
            max_levels: 8,
            profile_s_max: DEFAULT_S_MAX,
            dsig: DEFAULT_DSIG,
            min_scale_growth: 2.0,
        }
    }
}

/// Iterated scale selection, profile recovery and subtraction.
pub fn decompose(seq: &FunctionSequence, opts: &DecomposeOptions) -> Result<DecompositionResult> {
    let params = *seq.params();
    let ns = seq.n_list().to_vec();
    let last = ns.len() - 1;
    let grad_total = seq.fields()[last].grad_l2_norm_sq();
    let mut residuals: Vec<LogRadialField> = seq.fields().to_vec();
    let mut a = seq.a0_estimate();
    let mut history = vec![a];
    let mut levels = Vec::new();
    let mut grad_profiles = 0.0;
    let bound_c = std::f64::consts::PI / 2.0;

    let termination = loop {
        if a <= opts.eps_stop {
            break Termination::ResidualBelowEps;
        }
        if levels.len() >= opts.max_levels {
            break Termination::MaxLevels;
        }
        let remaining = residuals[last].grad_l2_norm_sq();
        if remaining < bound_c * a * a {
            break Termination::EnergyExhausted;
        }
        let mut selections = Vec::with_capacity(ns.len());
        let mut failure = None;
        for r in &residuals {
            match select_scale(r, a, 0.1 * a) {
                Ok(s) => selections.push(s),
                Err(LabError::Degenerate(msg)) => {
                    failure = Some(msg);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if let Some(msg) = failure {
            break Termination::Degenerate(msg);
        }
        let scales: Vec<f64> = selections.iter().map(|s| s.alpha).collect();
        if scales[last] < opts.min_scale_growth * scales[0] {
            break Termination::Degenerate(format!(
                "selected scales do not diverge: {} at n = {} vs {} at n = {}",
                scales[last], ns[last], scales[0], ns[0]
            ));
        }
        let recovery = recover_profile(&residuals, &scales, Some(a), opts.profile_s_max, opts.dsig)?;
        for (r, &alpha) in residuals.iter_mut().zip(&scales) {
            subtract_bubble(r, &recovery.profile, alpha);
        }
        let lux = residuals.iter().map(|r| luxemburg_norm(r, &params)).collect::<Result<Vec<_>>>()?;
        let a_next = tail_sup(&lux);
        grad_profiles += recovery.profile.derivative_norm_sq();
        let stability =
            Stability { grad_total, grad_profiles, grad_residual: residuals[last].grad_l2_norm_sq() };
        let scale_fit = ScaleDescriptor::fit_power(&ns, &scales)?;
        levels.push(Level { selections, recovery, scale_fit, residual_orlicz: a_next, stability });
        history.push(a_next);
        a = a_next;
    };
    Ok(DecompositionResult { n_list: ns, levels, residual_orlicz: history, termination })
}

fn subtract_bubble(r: &mut LogRadialField, profile: &Profile, alpha: f64) {
    let s_min = r.s_min();
    let ds = r.ds();
    for (i, v) in r.values_mut().iter_mut().enumerate() {
        let b = bubble_value(profile, alpha, s_min + i as f64 * ds);
        let d = *v - b;
        // cancellation noise would otherwise dominate the residual norm
        *v = if d.abs() <= 16.0 * f64::EPSILON * (v.abs() + b.abs()) { 0.0 } else { d };
    }
}

/// A located concentration core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreHit {
    pub center: [f64; 2],
    /// `|E ∩ B(x, e^{−bα})| / |E|`
    pub ratio: f64,
    pub level_set_cells: usize,
    pub radius: f64,
}

/// Level-set cells `|f| ≥ √(2α)(1 − ε₀/10)A0` as (i, j) pairs.
fn level_set(f: &Field2D, alpha: f64, a0: f64, eps0: f64) -> Vec<(usize, usize)> {
    let threshold = (2.0 * alpha).sqrt() * (1.0 - eps0 / 10.0) * a0;
    let mut cells = Vec::new();
    for j in 0..f.ny() {
        for i in 0..f.nx() {
            if f.at(i, j).abs() >= threshold {
                cells.push((i, j));
            }
        }
    }
    cells
}

fn check_core_args(alpha: f64, a0: f64, eps0: f64) -> Result<()> {
    if !(eps0 > 0.0 && eps0 < 0.5) {
        return Err(LabError::InvalidArgument(format!("eps0 = {eps0} outside (0, 1/2)")));
    }
    if !(alpha > 0.0 && a0 > 0.0) {
        return Err(LabError::InvalidArgument("alpha and A0 must be positive".into()));
    }
    Ok(())
}

/// Best ball centre among `cells`: largest count, then smallest spread.
fn best_ball(f: &Field2D, cells: &[(usize, usize)], radius: f64) -> (usize, usize) {
    let h = f.h();
    let rc = radius / h;
    let r2 = rc * rc;
    let reach = rc.floor() as isize;
    let mut occupied = std::collections::HashSet::with_capacity(cells.len());
    for &c in cells {
        occupied.insert(c);
    }
    let scan_window = (2 * reach + 1).pow(2) as usize;
    let mut best = (0usize, f64::INFINITY, 0usize);
    for (k, &(ci, cj)) in cells.iter().enumerate() {
        let mut count = 0usize;
        let mut spread = 0.0;
        let mut visit = |di: isize, dj: isize| {
            let d2 = (di * di + dj * dj) as f64;
            if d2 <= r2 + 1e-9 {
                count += 1;
                spread += d2;
            }
        };
        if scan_window < cells.len() {
            for dj in -reach..=reach {
                for di in -reach..=reach {
                    let (i, j) = (ci as isize + di, cj as isize + dj);
                    if i >= 0 && j >= 0 && occupied.contains(&(i as usize, j as usize)) {
                        visit(di, dj);
                    }
                }
            }
        } else {
            for &(i, j) in cells {
                visit(i as isize - ci as isize, j as isize - cj as isize);
            }
        }
        if count > best.0 || (count == best.0 && spread < best.1) {
            best = (count, spread, k);
        }
    }
    cells[best.2]
}

fn ball_count(cells: &[(usize, usize)], c: (usize, usize), radius_cells: f64) -> usize {
    let r2 = radius_cells * radius_cells + 1e-9;
    cells
        .iter()
        .filter(|&&(i, j)| {
            let di = i as f64 - c.0 as f64;
            let dj = j as f64 - c.1 as f64;
            di * di + dj * dj <= r2
        })
        .count()
}

/// Core of the largest concentration; `None` when the level set is empty.
pub fn find_core(f: &Field2D, alpha: f64, a0: f64, eps0: f64) -> Result<Option<CoreHit>> {
    Ok(find_cores(f, alpha, a0, eps0, 1)?.into_iter().next())
}

/// Up to `k` cores, each found after removing the cells claimed by the
/// previous balls.
pub fn find_cores(f: &Field2D, alpha: f64, a0: f64, eps0: f64, k: usize) -> Result<Vec<CoreHit>> {
    check_core_args(alpha, a0, eps0)?;
    let b = 1.0 - 2.0 * eps0;
    let radius = (-b * alpha).exp();
    let rc = radius / f.h();
    let mut cells = level_set(f, alpha, a0, eps0);
    let mut hits = Vec::new();
    while hits.len() < k && !cells.is_empty() {
        let c = best_ball(f, &cells, radius);
        let count = ball_count(&cells, c, rc);
        hits.push(CoreHit {
            center: f.point(c.0, c.1),
            ratio: count as f64 / cells.len() as f64,
            level_set_cells: cells.len(),
            radius,
        });
        let r2 = rc * rc + 1e-9;
        cells.retain(|&(i, j)| {
            let di = i as f64 - c.0 as f64;
            let dj = j as f64 - c.1 as f64;
            di * di + dj * dj > r2
        });
    }
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_is_degenerate() {
        let z = LogRadialField::zeros(-1.0, 0.1, 50).unwrap();
        assert!(matches!(select_scale(&z, 0.3, 0.03), Err(LabError::Degenerate(_))));
    }

    #[test]
    fn decay_bound_guard_and_homogeneity() {
        let z = LogRadialField::zeros(-1.0, 0.1, 50).unwrap();
        assert_eq!(radial_decay_bound(&z, 1), 0.0);
        let f = LogRadialField::from_fn(-1.0, 0.01, 400, |s| s.clamp(0.0, 1.5)).unwrap();
        let c1 = radial_decay_bound(&f, 1);
        let c2 = radial_decay_bound(&f.scaled(2.0), 1);
        assert!((c1 - c2).abs() < 1e-12 * c1);
    }

    #[test]
    fn termination_json_shape() {
        let t = Termination::Degenerate("x".into());
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"reason":"degenerate","detail":"x"}"#);
        let s = serde_json::to_string(&Termination::ResidualBelowEps).unwrap();
        assert_eq!(s, r#"{"reason":"residual-below-eps"}"#);
    }
}
