//! Linearizability, Hölder, Strichartz-type and local-energy diagnostics.

use serde::{Deserialize, Serialize};

use super::{evolve, evolve_free, nonlinear_density, CauchyData, KGState, KgConfig, RadialGrid, Trajectory};
use crate::error::{LabError, Result};
use crate::field::LogRadialField;
use crate::orlicz::{luxemburg_norm, OrliczParams};

/// Default log-radial step used when a radial grid function is re-expressed
/// as a [`LogRadialField`].
pub const LOG_DS: f64 = 1.0 / 64.0;

fn same_schedule(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.grid != b.grid {
        return Err(LabError::GridMismatch("trajectories use different grids".into()));
    }
    if a.snapshots.len() != b.snapshots.len()
        || a.snapshots.iter().zip(&b.snapshots).any(|(x, y)| (x.t - y.t).abs() > 1e-12)
    {
        return Err(LabError::GridMismatch("snapshot times differ".into()));
    }
    Ok(())
}

/// `∫ |∂_t w|² + |∇w|² + |w|² dx` on the grid.
pub fn free_energy_density_integral(grid: &RadialGrid, w: &[f64], wt: &[f64]) -> f64 {
    grid.weighted_dot(wt, wt) + grid.gradient_energy(w) + grid.weighted_dot(w, w)
}

/// `sup_t E_c(u − v, t)` over the common snapshots.
pub fn kinetic_energy_gap(traj_nl: &Trajectory, traj_free: &Trajectory) -> Result<f64> {
    same_schedule(traj_nl, traj_free)?;
    let grid = traj_nl.grid;
    let mut gap: f64 = 0.0;
    for (a, b) in traj_nl.snapshots.iter().zip(&traj_free.snapshots) {
        let w: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect();
        let wt: Vec<f64> = a.ut.iter().zip(&b.ut).map(|(x, y)| x - y).collect();
        gap = gap.max(free_energy_density_integral(&grid, &w, &wt));
    }
    Ok(gap)
}

/// `sup|u| + max |u(r₁) − u(r₂)|/|r₁ − r₂|^{1/4}` over sample pairs with
/// `0 < |r₁ − r₂| ≤ 1`. `points` are `(r, u)` pairs in any order.
pub fn holder_quarter_norm_points(points: &[(f64, f64)]) -> f64 {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sup = pts.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    let mut semi: f64 = 0.0;
    for i in 0..pts.len() {
        let (ri, ui) = pts[i];
        for &(rj, uj) in &pts[i + 1..] {
            let d = rj - ri;
            if d > 1.0 {
                break;
            }
            if d > 0.0 {
                semi = semi.max((uj - ui).abs() / d.sqrt().sqrt());
            }
        }
    }
    sup + semi
}

/// C^{1/4} proxy of a function on a radial grid.
pub fn holder_quarter_norm(grid: &RadialGrid, u: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = u.iter().enumerate().map(|(j, &v)| (grid.r(j), v)).collect();
    holder_quarter_norm_points(&pts)
}

/// C^{1/4} proxy of a log-radial field, sampled at `r = e^{-s_i}` and `r = 0`.
pub fn holder_quarter_norm_log(u: &LogRadialField) -> f64 {
    let mut pts: Vec<(f64, f64)> =
        u.values().iter().enumerate().map(|(i, &v)| ((-u.s(i)).exp(), v)).collect();
    pts.push((0.0, u.tail_value()));
    holder_quarter_norm_points(&pts)
}

/// Ingredients of the logarithmic inequality for one function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogInequality {
    pub sup_norm: f64,
    pub grad_sq: f64,
    pub l2_sq: f64,
    pub holder: f64,
}

impl LogInequality {
    pub fn of_log_field(u: &LogRadialField) -> Self {
        LogInequality {
            sup_norm: u.sup_norm(),
            grad_sq: u.grad_l2_norm_sq(),
            l2_sq: u.l2_norm_sq(),
            holder: holder_quarter_norm_log(u),
        }
    }

    pub fn of_grid(grid: &RadialGrid, u: &[f64]) -> Self {
        LogInequality {
            sup_norm: u.iter().fold(0.0, |m, v| m.max(v.abs())),
            grad_sq: grid.gradient_energy(u),
            l2_sq: grid.weighted_dot(u, u),
            holder: holder_quarter_norm(grid, u),
        }
    }

    /// `‖u‖²_∞ / (λ‖u‖²_μ log(e + 2‖u‖_{C^{1/4}}/‖u‖_μ))` with
    /// `‖u‖²_μ = ‖∇u‖² + μ²‖u‖²`.
    pub fn ratio(&self, mu: f64, lambda: f64) -> Result<f64> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(LabError::InvalidArgument(format!("mu = {mu} outside (0, 1]")));
        }
        if !(lambda > 2.0 / std::f64::consts::PI) {
            return Err(LabError::InvalidArgument(format!("lambda = {lambda} <= 2/pi")));
        }
        let norm_sq = self.grad_sq + mu * mu * self.l2_sq;
        if !(norm_sq > 0.0) {
            return Err(LabError::Degenerate("u vanishes identically".into()));
        }
        let norm = norm_sq.sqrt();
        let log = (std::f64::consts::E + 2.0 * self.holder / norm).ln();
        Ok(self.sup_norm.powi(2) / (lambda * norm_sq * log))
    }
}

/// Ratio statistic of the logarithmic inequality for a log-radial field.
pub fn log_inequality_check(u: &LogRadialField, mu: f64, lambda: f64) -> Result<f64> {
    LogInequality::of_log_field(u).ratio(mu, lambda)
}

/// Index `m` of the node whose outer face `r_{m+1/2}` is nearest to `radius`.
fn face_index(grid: &RadialGrid, radius: f64) -> usize {
    let m = (radius / grid.dr() - 0.5).round().max(0.0) as usize;
    m.min(grid.last() - 1)
}

fn local_energy_parts(grid: &RadialGrid, u: &[f64], ut: &[f64], p: Option<u32>, m: usize) -> f64 {
    let mut e = 0.0;
    for j in 0..=m {
        let pot = u[j] * u[j] + p.map_or(0.0, |p| nonlinear_density(u[j], p));
        e += grid.weight(j) * (ut[j] * ut[j] + pot);
    }
    for j in 0..m {
        e += grid.face(j) * (u[j + 1] - u[j]).powi(2);
    }
    e
}

/// Energy inside the ball bounded by the cell face nearest to `radius`.
pub fn local_energy(state: &KGState, radius: f64) -> f64 {
    let m = face_index(&state.grid, radius);
    local_energy_parts(&state.grid, &state.u, &state.ut, Some(state.p), m)
}

/// Same as [`local_energy`] for the free equation.
pub fn local_free_energy(state: &KGState, radius: f64) -> f64 {
    let m = face_index(&state.grid, radius);
    local_energy_parts(&state.grid, &state.u, &state.ut, None, m)
}

/// Outward energy flux `2 ∂_t u ∂_r u · 2πr` at the face nearest to `radius`.
pub fn boundary_flux(grid: &RadialGrid, u: &[f64], ut: &[f64], radius: f64) -> f64 {
    let m = face_index(grid, radius);
    2.0 * ut[m] * grid.face(m) * (u[m + 1] - u[m])
}

/// Per snapshot interval, `ΔE_loc/Δt` minus the trapezoidal mean of the
/// boundary flux.
pub fn flux_balance(traj: &Trajectory, radius: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0 && radius < traj.grid.radius()) {
        return Err(LabError::InvalidArgument(format!("radius = {radius}")));
    }
    let grid = traj.grid;
    let m = face_index(&grid, radius);
    let p = if traj.free { None } else { Some(traj.p) };
    let mut out = Vec::with_capacity(traj.snapshots.len().saturating_sub(1));
    for w in traj.snapshots.windows(2) {
        let e0 = local_energy_parts(&grid, &w[0].u, &w[0].ut, p, m);
        let e1 = local_energy_parts(&grid, &w[1].u, &w[1].ut, p, m);
        let f0 = boundary_flux(&grid, &w[0].u, &w[0].ut, radius);
        let f1 = boundary_flux(&grid, &w[1].u, &w[1].ut, radius);
        let dt = w[1].t - w[0].t;
        out.push((e1 - e0) / dt - 0.5 * (f0 + f1));
    }
    Ok(out)
}

/// Whether `(q, r)` satisfies `1/q + 2/r = 1` with `q, r ≥ 2`.
pub fn admissible(q: f64, r: f64) -> bool {
    q >= 2.0 && r >= 2.0 && (1.0 / q + 2.0 / r - 1.0).abs() <= 1e-12
}

fn time_norm(times: &[f64], values: &[f64], q: f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..times.len() {
        acc += 0.5 * (times[k] - times[k - 1]) * (values[k].powf(q) + values[k - 1].powf(q));
    }
    acc.powf(1.0 / q)
}

/// `L^q` norm over the snapshot window of the spatial `C^{1/4}` proxy. The
/// time exponent must pair with the Besov index `r = 2q/(q − 1)` admissibly,
/// and the embedding into `C^{1/4}` holds for `q = 4`.
pub fn strichartz_holder_norm(traj: &Trajectory, q: f64) -> Result<f64> {
    let r = 2.0 * q / (q - 1.0);
    if !admissible(q, r) || (q - 4.0).abs() > 1e-12 {
        return Err(LabError::InvalidArgument(format!("(q, r) = ({q}, {r}) not supported")));
    }
    let holder: Vec<f64> = traj.snapshots.iter().map(|s| holder_quarter_norm(&traj.grid, &s.u)).collect();
    Ok(time_norm(&traj.times(), &holder, q))
}

/// `L⁸_t L¹⁶_x` over the snapshot window.
pub fn x_norm(traj: &Trajectory) -> f64 {
    let spatial: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| {
            let mut acc = 0.0;
            for j in 0..traj.grid.last() {
                acc += traj.grid.weight(j) * s.u[j].abs().powi(16);
            }
            acc.powf(1.0 / 16.0)
        })
        .collect();
    time_norm(&traj.times(), &spatial, 8.0)
}

/// Re-expresses a radial grid function as a log-radial field on
/// `s ∈ [−ln R, −ln dr + 3]` with linear interpolation in `r`.
pub fn to_log_field(grid: &RadialGrid, u: &[f64], ds: f64) -> Result<LogRadialField> {
    let s_min = -grid.radius().ln();
    let s_max = -grid.dr().ln() + 3.0;
    let n = ((s_max - s_min) / ds).ceil() as usize + 1;
    LogRadialField::from_fn(s_min, ds, n, |s| {
        let x = (-s).exp() / grid.dr();
        let j = x.floor() as usize;
        if j >= grid.last() {
            return 0.0;
        }
        let t = x - j as f64;
        u[j] * (1.0 - t) + u[j + 1] * t
    })
}

/// Luxemburg norm of each snapshot of `traj`.
pub fn snapshot_lux_norms(traj: &Trajectory, params: &OrliczParams) -> Result<Vec<f64>> {
    traj.snapshots.iter().map(|s| luxemburg_norm(&to_log_field(&traj.grid, &s.u, LOG_DS)?, params)).collect()
}

/// Outcome of one member of a linearizability ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizabilityRun {
    pub n: f64,
    pub initial_energy: f64,
    pub criticality: super::Criticality,
    pub kinetic_gap: f64,
    /// `max_t ‖v_n(t)‖_{L^{φ_p}}` of the free solution
    pub free_lux_max: f64,
    /// whether `free_lux_max < 1/√(4π)`
    pub orlicz_smallness: bool,
}

/// Runs the nonlinear and free evolutions for the data `n^{-1/2}·base` for
/// each `n`, in parallel.
pub fn linearizability(
    base: &CauchyData,
    ns: &[f64],
    cfg: &KgConfig,
    kappa: f64,
) -> Result<Vec<LinearizabilityRun>> {
    let params = OrliczParams::new(cfg.p, kappa);
    params.validate()?;
    let one = |n: f64| -> Result<LinearizabilityRun> {
        if !(n > 0.0) {
            return Err(LabError::InvalidArgument(format!("n = {n}")));
        }
        let data = base.scaled(n.powf(-0.5));
        let nl = evolve(&data, cfg)?;
        let free = evolve_free(&data, cfg)?;
        let free_lux_max = snapshot_lux_norms(&free, &params)?.into_iter().fold(0.0, f64::max);
        Ok(LinearizabilityRun {
            n,
            initial_energy: nl.energies[0].total,
            criticality: nl.energies[0].criticality,
            kinetic_gap: kinetic_energy_gap(&nl, &free)?,
            free_lux_max,
            orlicz_smallness: free_lux_max < 1.0 / (4.0 * std::f64::consts::PI).sqrt(),
        })
    };
    std::thread::scope(|scope| {
        let handles: Vec<_> = ns.iter().map(|&n| scope.spawn(move || one(n))).collect();
        handles.into_iter().map(|h| h.join().expect("ladder worker panicked")).collect()
    })
}
