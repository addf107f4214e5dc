//! Profiles, elementary concentrations and their asymptotic Orlicz norms.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{check_uniform, read_two_columns, LogRadialField};
use crate::orlicz::{luxemburg_norm, OrliczParams};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

pub const DEFAULT_DSIG: f64 = 1.0 / 512.0;
pub const DEFAULT_S_MAX: f64 = 128.0;

/// A sampled profile `ψ` on `[0, S_max]`, zero for `s < 0` and constant past
/// `S_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    dsig: f64,
    psi: Vec<f64>,
}

/// Outcome of the structural checks on a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileReport {
    pub starts_at_zero: bool,
    /// Largest `|ψ(s)−ψ(t)| / (‖ψ'‖ |s−t|^{1/2})` over grid pairs.
    pub holder_ratio: f64,
    /// Endpoint values of `ψ(s)/√s` divided by its interior maximum.
    pub left_end_ratio: f64,
    pub right_end_ratio: f64,
}

impl ProfileReport {
    pub fn ok(&self) -> bool {
        self.starts_at_zero
            && self.holder_ratio <= 1.0 + 1e-12
            && self.left_end_ratio < 0.1
            && self.right_end_ratio < 0.1
    }
}

impl Profile {
    pub fn new(dsig: f64, psi: Vec<f64>) -> Result<Self> {
        if !(dsig > 0.0 && dsig.is_finite()) {
            return Err(LabError::InvalidArgument(format!("dsig = {dsig}")));
        }
        if psi.len() < 2 {
            return Err(LabError::InvalidArgument("profile needs two samples".into()));
        }
        if psi.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument("non-finite profile sample".into()));
        }
        Ok(Profile { dsig, psi })
    }

    pub fn from_fn(s_max: f64, dsig: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = (s_max / dsig).round() as usize;
        Self::new(dsig, (0..=n).map(|i| f(i as f64 * dsig)).collect())
    }

    /// `ψ(s) = c·min(s, a)/√a`.
    pub fn moser(a: f64, amplitude: f64) -> Result<Self> {
        Self::moser_on(a, amplitude, DEFAULT_S_MAX, DEFAULT_DSIG)
    }

    pub fn moser_on(a: f64, amplitude: f64, s_max: f64, dsig: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(LabError::InvalidArgument(format!("Moser knee a = {a}")));
        }
        if s_max < a {
            return Err(LabError::InvalidArgument("S_max below the Moser knee".into()));
        }
        Self::from_fn(s_max, dsig, |s| amplitude * s.min(a) / a.sqrt())
    }

    pub fn dsig(&self) -> f64 {
        self.dsig
    }

    pub fn s_max(&self) -> f64 {
        (self.psi.len() - 1) as f64 * self.dsig
    }

    pub fn samples(&self) -> &[f64] {
        &self.psi
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Profile { dsig: self.dsig, psi: self.psi.iter().map(|v| c * v).collect() }
    }

    /// Piecewise-linear evaluation; zero for `s ≤ 0`, constant past `S_max`.
    pub fn value_at(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let x = s / self.dsig;
        let last = self.psi.len() - 1;
        if x >= last as f64 {
            return self.psi[last];
        }
        let i = x.floor() as usize;
        let t = x - i as f64;
        self.psi[i] * (1.0 - t) + self.psi[i + 1] * t
    }

    /// Discrete `‖ψ'‖²_{L²}`, including a jump from 0 at `s = 0` if `ψ(0) ≠ 0`.
    pub fn derivative_norm_sq(&self) -> f64 {
        let sum: f64 = self.psi.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        sum / self.dsig
    }

    /// Discrete `‖ψ' − φ'‖_{L²}`; `other` is resampled onto this grid.
    pub fn derivative_distance(&self, other: &Profile) -> f64 {
        let mut sum = 0.0;
        let mut prev = 0.0;
        let mut prev_o = 0.0;
        for (i, &v) in self.psi.iter().enumerate() {
            let o = other.value_at(i as f64 * self.dsig);
            if i > 0 {
                sum += ((v - prev) - (o - prev_o)).powi(2);
            }
            prev = v;
            prev_o = o;
        }
        (sum / self.dsig).sqrt()
    }

    /// Index of the first sample after which `ψ` is constant.
    pub fn flat_onset(&self) -> usize {
        let last = *self.psi.last().unwrap();
        match self.psi.iter().rposition(|&v| v != last) {
            Some(i) => i + 1,
            None => 0,
        }
    }

    /// `max_{s>0} |ψ(s)|/√s` over the grid.
    pub fn max_sqrt_ratio(&self) -> f64 {
        self.psi
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, v)| v.abs() / (i as f64 * self.dsig).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn report(&self) -> ProfileReport {
        let d = self.derivative_norm_sq().sqrt();
        let n = self.psi.len();
        let mut holder: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let num = (self.psi[j] - self.psi[i]).abs();
                if num == 0.0 {
                    continue;
                }
                let den = d * ((j - i) as f64 * self.dsig).sqrt();
                holder = holder.max(num / den);
            }
        }
        let ratios: Vec<f64> = (1..n).map(|i| self.psi[i].abs() / (i as f64 * self.dsig).sqrt()).collect();
        let interior = if ratios.len() > 2 {
            ratios[1..ratios.len() - 1].iter().cloned().fold(0.0, f64::max)
        } else {
            0.0
        };
        let rel = |x: f64| if interior > 0.0 { x / interior } else { 0.0 };
        ProfileReport {
            starts_at_zero: self.psi[0] == 0.0,
            holder_ratio: holder,
            left_end_ratio: rel(ratios[0]),
            right_end_ratio: rel(*ratios.last().unwrap()),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["s", "psi"])?;
        for (i, v) in self.psi.iter().enumerate() {
            wr.write_record([(i as f64 * self.dsig).to_string(), v.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "s" || &headers[1] != "psi" {
            return Err(LabError::Parse(format!("expected header `s,psi`, got {headers:?}")));
        }
        let (s, psi) = read_two_columns(&mut rd)?;
        let dsig = check_uniform(&s)?;
        if s[0].abs() > 1e-12 * dsig {
            return Err(LabError::Parse("profile grid must start at s = 0".into()));
        }
        Self::new(dsig, psi)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Parametric scale sequence `n ↦ α_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum ScaleDescriptor {
    /// `c·n^γ`
    Power { c: f64, gamma: f64 },
    /// `c·β^n`
    Geometric { c: f64, beta: f64 },
}

impl ScaleDescriptor {
    pub fn power(c: f64, gamma: f64) -> Self {
        ScaleDescriptor::Power { c, gamma }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScaleDescriptor::Power { c, gamma } => c > 0.0 && gamma > 0.0,
            ScaleDescriptor::Geometric { c, beta } => c > 0.0 && beta > 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(LabError::InvalidArgument(format!(
                "scale descriptor {self:?} is not increasing and unbounded"
            )))
        }
    }

    pub fn at(&self, n: f64) -> f64 {
        self.ln_at(n).exp()
    }

    pub fn ln_at(&self, n: f64) -> f64 {
        match *self {
            ScaleDescriptor::Power { c, gamma } => c.ln() + gamma * n.ln(),
            ScaleDescriptor::Geometric { c, beta } => c.ln() + n * beta.ln(),
        }
    }

    /// Least-squares fit of `ln α = ln c + γ ln n`.
    pub fn fit_power(ns: &[f64], alphas: &[f64]) -> Result<Self> {
        if ns.len() < 2 || ns.len() != alphas.len() {
            return Err(LabError::InvalidArgument("power fit needs two points".into()));
        }
        let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
        let ys: Vec<f64> = alphas.iter().map(|a| a.ln()).collect();
        let m = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / m;
        let my = ys.iter().sum::<f64>() / m;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        if sxx == 0.0 {
            return Err(LabError::InvalidArgument("power fit needs distinct n".into()));
        }
        let gamma = sxy / sxx;
        Ok(ScaleDescriptor::Power { c: (my - gamma * mx).exp(), gamma })
    }
}

/// Core sequence `n ↦ x_n ∈ ℝ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoreDescriptor {
    Fixed([f64; 2]),
    /// `x_n = direction·e^{−rate·n}`
    Exponential {
        direction: [f64; 2],
        rate: f64,
    },
}

impl Default for CoreDescriptor {
    fn default() -> Self {
        CoreDescriptor::Fixed([0.0, 0.0])
    }
}

impl CoreDescriptor {
    pub fn at(&self, n: f64) -> [f64; 2] {
        match *self {
            CoreDescriptor::Fixed(x) => x,
            CoreDescriptor::Exponential { direction, rate } => {
                let f = (-rate * n).exp();
                [direction[0] * f, direction[1] * f]
            }
        }
    }

    fn is_origin(&self) -> bool {
        matches!(self, CoreDescriptor::Fixed([x, y]) if *x == 0.0 && *y == 0.0)
    }

    /// `ln|x_n − y_n|`, evaluated analytically when one core is the origin.
    pub fn ln_distance(&self, other: &CoreDescriptor, n: f64) -> f64 {
        let exp_ln = |direction: [f64; 2], rate: f64| direction[0].hypot(direction[1]).ln() - rate * n;
        match (self, other) {
            (CoreDescriptor::Exponential { direction, rate }, o) if o.is_origin() => {
                exp_ln(*direction, *rate)
            }
            (s, CoreDescriptor::Exponential { direction, rate }) if s.is_origin() => {
                exp_ln(*direction, *rate)
            }
            _ => {
                let a = self.at(n);
                let b = other.at(n);
                (a[0] - b[0]).hypot(a[1] - b[1]).ln()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationTriplet {
    pub scale: ScaleDescriptor,
    pub core: CoreDescriptor,
    pub profile: Profile,
}

impl ConcentrationTriplet {
    pub fn centered(scale: ScaleDescriptor, profile: Profile) -> Self {
        ConcentrationTriplet { scale, core: CoreDescriptor::default(), profile }
    }
}

/// How log-radial grids for bubbles are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPolicy {
    /// Requested step, snapped to a multiple or divisor of `α·dsig` of the
    /// smallest bubble so that its profile nodes fall on grid nodes.
    pub ds: f64,
    /// Nodes kept below `s = 0`.
    pub left_margin: f64,
    pub max_samples: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy { ds: 1.0 / 32.0, left_margin: 1.0, max_samples: 50_000_000 }
    }
}

impl GridPolicy {
    pub fn with_ds(ds: f64) -> Self {
        GridPolicy { ds, ..Default::default() }
    }

    fn snapped_step(&self, unit: f64) -> f64 {
        if self.ds >= unit {
            unit * (self.ds / unit + 1e-9).floor()
        } else {
            unit / (unit / self.ds - 1e-9).ceil()
        }
    }
}

/// `√(α/2π)·ψ(s/α)` sampled at `s`.
#[inline]
pub fn bubble_value(profile: &Profile, alpha: f64, s: f64) -> f64 {
    (alpha / TWO_PI).sqrt() * profile.value_at(s / alpha)
}

/// Superposition `Σ_j √(α_j/2π) ψ_j(s/α_j)` of centered bubbles on one grid.
pub fn bubble_sum(parts: &[(&Profile, f64)], policy: &GridPolicy) -> Result<LogRadialField> {
    if parts.is_empty() {
        return Err(LabError::InvalidArgument("no bubbles to sum".into()));
    }
    for &(_, alpha) in parts {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(LabError::InvalidArgument(format!("scale α = {alpha}")));
        }
    }
    let (p0, a0) = parts.iter().cloned().min_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap();
    let ds = policy.snapped_step(a0 * p0.dsig());
    let s_end = parts.iter().map(|(p, a)| a * (p.flat_onset() as f64 * p.dsig())).fold(0.0, f64::max);
    let left = (policy.left_margin / ds).ceil().max(1.0) as usize;
    let right = (s_end / ds).ceil() as usize + 2;
    let samples = left + right + 1;
    if samples > policy.max_samples {
        return Err(LabError::GridBudget { samples, cap: policy.max_samples });
    }
    let s_min = -(left as f64) * ds;
    LogRadialField::from_fn(s_min, ds, samples, |s| parts.iter().map(|(p, a)| bubble_value(p, *a, s)).sum())
}

/// The centered bubble `g_n` of a triplet.
pub fn elementary_concentration(
    t: &ConcentrationTriplet,
    n: f64,
    policy: &GridPolicy,
) -> Result<LogRadialField> {
    t.scale.validate()?;
    if !t.core.is_origin() {
        return Err(LabError::InvalidArgument(
            "log-radial bubbles need a centered core; use the 2D builder".into(),
        ));
    }
    let alpha = t.scale.at(n);
    bubble_sum(&[(&t.profile, alpha)], policy)
}

/// `(1/√(4π))·max_{s>0} |ψ(s)|/√s`.
pub fn concentration_limit_norm(psi: &Profile) -> f64 {
    psi.max_sqrt_ratio() / FOUR_PI.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Orthogonality {
    OrthogonalByScale,
    OrthogonalByCore { a: f64 },
    Same,
    Undetermined,
}

/// Divergence threshold on `|log(α̃_n/α_n)|` at the end of the range.
pub const SCALE_LOG_THRESHOLD: f64 = 5.0;

/// Finite-range orthogonality verdict for two triplets.
pub fn orthogonality_test(
    t1: &ConcentrationTriplet,
    t2: &ConcentrationTriplet,
    n_range: &[f64],
) -> Orthogonality {
    if n_range.len() < 2 {
        return Orthogonality::Undetermined;
    }
    let logs: Vec<f64> = n_range.iter().map(|&n| (t2.scale.ln_at(n) - t1.scale.ln_at(n)).abs()).collect();
    let first = logs[0];
    let last = *logs.last().unwrap();
    if last >= SCALE_LOG_THRESHOLD && last > first {
        return Orthogonality::OrthogonalByScale;
    }
    let same_scale = logs.iter().all(|&l| l < 1e-12);
    if !same_scale {
        return Orthogonality::Undetermined;
    }
    if t1.core == t2.core {
        return Orthogonality::Same;
    }
    let ratios: Vec<f64> =
        n_range.iter().map(|&n| -t1.core.ln_distance(&t2.core, n) / t1.scale.at(n)).collect();
    let k = ratios.len();
    let a = ratios[k - 1];
    let settled = (ratios[k - 1] - ratios[k - 2]).abs() <= 1e-2 * a.abs().max(1.0);
    if !settled || !a.is_finite() {
        return Orthogonality::Undetermined;
    }
    let a = a.max(0.0);
    let vanishes = |p: &Profile| {
        p.samples()
            .iter()
            .enumerate()
            .take_while(|(i, _)| (*i as f64) * p.dsig() < a * (1.0 - 1e-9))
            .all(|(_, v)| v.abs() <= 1e-12)
    };
    if a > 0.0 && (vanishes(&t1.profile) || vanishes(&t2.profile)) {
        Orthogonality::OrthogonalByCore { a }
    } else {
        Orthogonality::Undetermined
    }
}

/// `‖Σ_j g_n^{(j)}‖_{L^{φ_p}}` for pairwise scale-orthogonal centered bubbles.
pub fn sum_norm_limit(
    ts: &[ConcentrationTriplet],
    n: f64,
    params: &OrliczParams,
    policy: &GridPolicy,
) -> Result<f64> {
    for t in ts {
        t.scale.validate()?;
        if !t.core.is_origin() {
            return Err(LabError::InvalidArgument("sum_norm_limit needs centered cores".into()));
        }
    }
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            let verdict = orthogonality_test(&ts[i], &ts[j], &[1.0, n]);
            if verdict != Orthogonality::OrthogonalByScale {
                return Err(LabError::InvalidArgument(format!(
                    "triplets {i} and {j} are not orthogonal by scale at n = {n}: {verdict:?}"
                )));
            }
        }
    }
    let parts: Vec<(&Profile, f64)> = ts.iter().map(|t| (&t.profile, t.scale.at(n))).collect();
    let field = bubble_sum(&parts, policy)?;
    luxemburg_norm(&field, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moser_profile_structure() {
        let p = Profile::moser(2.0, 1.0).unwrap();
        assert!((p.derivative_norm_sq() - 1.0).abs() < 1e-12);
        assert!((p.max_sqrt_ratio() - 1.0).abs() < 1e-12);
        assert_eq!(p.flat_onset(), 1024);
    }

    #[test]
    fn limit_norm_of_moser_is_universal() {
        for a in [0.25, 1.0, 4.0] {
            let p = Profile::moser(a, 1.0).unwrap();
            let want = 1.0 / FOUR_PI.sqrt();
            assert!((concentration_limit_norm(&p) - want).abs() < 1e-12);
            assert!((concentration_limit_norm(&p.scaled(-3.0)) - 3.0 * want).abs() < 1e-12);
        }
    }

    #[test]
    fn snapping_lands_profile_nodes_on_grid() {
        let pol = GridPolicy::with_ds(1.0 / 32.0);
        let unit = 100.0 / 512.0;
        let ds = pol.snapped_step(unit);
        assert!(ds <= 1.0 / 32.0);
        assert!(((unit / ds) - (unit / ds).round()).abs() < 1e-9);
        let coarse = GridPolicy::with_ds(62.5).snapped_step(1000.0 / 512.0);
        assert!((coarse / (1000.0 / 512.0) - 32.0).abs() < 1e-9);
    }

    #[test]
    fn power_fit_recovers_exponent() {
        let ns = [10.0, 30.0, 100.0];
        let alphas: Vec<f64> = ns.iter().map(|n: &f64| 2.0 * n.powf(3.0)).collect();
        match ScaleDescriptor::fit_power(&ns, &alphas).unwrap() {
            ScaleDescriptor::Power { c, gamma } => {
                assert!((gamma - 3.0).abs() < 1e-12);
                assert!((c - 2.0).abs() < 1e-9);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn descriptor_json_shapes() {
        let s: ScaleDescriptor = serde_json::from_str(r#"{"form":"power","c":1.0,"gamma":3.0}"#).unwrap();
        assert_eq!(s, ScaleDescriptor::power(1.0, 3.0));
        let c: CoreDescriptor = serde_json::from_str("[0.5, -1.0]").unwrap();
        assert_eq!(c, CoreDescriptor::Fixed([0.5, -1.0]));
    }
}
