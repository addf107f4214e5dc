//! Radial Klein–Gordon equation with exponential nonlinearity
//!
//! `u_tt − Δu + u + F_p(u) = 0`, `F_p(u) = u·φ_p(√(4π)·u)`,
//!
//! on the disk of radius `R` with a Dirichlet cap at `r = R`.
//!
//! Space is discretized by finite volumes on `r_j = j·dr`: node `j` owns the
//! annulus between the faces `r_{j±1/2}` (a disk of radius `dr/2` for
//! `j = 0`), so the discrete energy is an exact Hamiltonian for the
//! semi-discrete system and velocity Verlet conserves it to second order.

mod diagnostics;
mod io;

pub use diagnostics::*;
pub use io::*;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fixtures::RadialShape;
use crate::orlicz::{exp_tail, EXP_GUARD};

const PI: f64 = std::f64::consts::PI;
const FOUR_PI: f64 = 4.0 * PI;

/// Safety factor of the CFL condition `dt ≤ CFL·dr`.
pub const CFL: f64 = 0.5;

/// `F_p(u) = u·φ_p(√(4π)·u)`.
pub fn f_p(u: f64, p: u32) -> Result<f64> {
    if p < 1 {
        return Err(LabError::InvalidArgument(format!("p = {p} < 1")));
    }
    let x = FOUR_PI * u * u;
    if !(x <= EXP_GUARD) {
        return Err(LabError::Overflow { arg: "u", value: u });
    }
    Ok(u * exp_tail(x, p))
}

/// Nonlinear part of the potential density, `φ_{p+1}(√(4π)·u)/4π`.
fn nonlinear_density(u: f64, p: u32) -> f64 {
    let x = FOUR_PI * u * u;
    if x > EXP_GUARD {
        return f64::INFINITY;
    }
    exp_tail(x, p + 1) / FOUR_PI
}

/// Uniform radial grid `r_j = j·dr`, `j = 0..=n`, with `R = n·dr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    dr: f64,
    n: usize,
}

impl RadialGrid {
    pub fn new(radius: f64, dr: f64) -> Result<Self> {
        if !(dr > 0.0 && radius > dr && radius.is_finite()) {
            return Err(LabError::InvalidArgument(format!("R = {radius}, dr = {dr}")));
        }
        let n = (radius / dr).round() as usize;
        if ((n as f64) * dr - radius).abs() > 1e-9 * radius {
            return Err(LabError::InvalidArgument(format!("R = {radius} is not a multiple of dr = {dr}")));
        }
        Ok(RadialGrid { dr, n })
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    /// Index of the outermost node.
    pub fn last(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> usize {
        self.n + 1
    }

    pub fn radius(&self) -> f64 {
        self.n as f64 * self.dr
    }

    #[inline]
    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.dr
    }

    /// Area of the control volume of node `j`.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 {
            PI * self.dr * self.dr / 4.0
        } else {
            2.0 * PI * j as f64 * self.dr * self.dr
        }
    }

    /// `2π r_{j+1/2} / dr`, the coefficient of `(u_{j+1} − u_j)²` in the
    /// gradient energy.
    #[inline]
    pub fn face(&self, j: usize) -> f64 {
        2.0 * PI * (j as f64 + 0.5)
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut v: Vec<f64> = (0..=self.n).map(|j| f(self.r(j))).collect();
        v[self.n] = 0.0;
        v
    }

    /// `Σ_j w_j a_j b_j` over interior nodes.
    fn weighted_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        (0..self.n).map(|j| self.weight(j) * a[j] * b[j]).sum()
    }

    fn gradient_energy(&self, u: &[f64]) -> f64 {
        (0..self.n).map(|j| self.face(j) * (u[j + 1] - u[j]).powi(2)).sum()
    }
}

/// Solution state at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KGState {
    pub grid: RadialGrid,
    pub t: f64,
    pub p: u32,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
}

impl KGState {
    pub fn new(grid: RadialGrid, p: u32, u: Vec<f64>, ut: Vec<f64>) -> Result<Self> {
        if p < 1 {
            return Err(LabError::InvalidArgument(format!("p = {p} < 1")));
        }
        for (name, v) in [("u", &u), ("ut", &ut)] {
            if v.len() != grid.nodes() {
                return Err(LabError::GridMismatch(format!(
                    "{name} has {} values, grid has {} nodes",
                    v.len(),
                    grid.nodes()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(LabError::InvalidArgument(format!("{name} is not finite")));
            }
            if v[grid.last()] != 0.0 {
                return Err(LabError::InvalidArgument(format!("{name}(R) must vanish")));
            }
        }
        Ok(KGState { grid, t: 0.0, p, u, ut })
    }

    pub fn zeros(grid: RadialGrid, p: u32) -> Result<Self> {
        Self::new(grid, p, vec![0.0; grid.nodes()], vec![0.0; grid.nodes()])
    }

    /// Flips the sign of the velocity.
    pub fn reverse(&mut self) {
        for v in &mut self.ut {
            *v = -*v;
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Parts of the conserved energy. `potential = mass + nonlinear`, where
/// `mass = ‖u‖²_{L²}` and `nonlinear = ∫ φ_{p+1}(√(4π)u)/4π dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub gradient: f64,
    pub mass: f64,
    pub nonlinear: f64,
    pub potential: f64,
    pub total: f64,
    pub criticality: Criticality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

impl Criticality {
    pub fn classify(energy: f64) -> Self {
        if energy < 1.0 {
            Criticality::Subcritical
        } else if energy == 1.0 {
            Criticality::Critical
        } else {
            Criticality::Supercritical
        }
    }

    /// Classification that is only reported when `|E − 1|` exceeds ten
    /// times the quadrature error estimate `err`.
    pub fn classify_robust(energy: f64, err: f64) -> Option<Self> {
        if (energy - 1.0).abs() > 10.0 * err {
            Some(Self::classify(energy))
        } else {
            None
        }
    }
}

fn breakdown(grid: &RadialGrid, u: &[f64], ut: &[f64], p: Option<u32>) -> EnergyBreakdown {
    let kinetic = grid.weighted_dot(ut, ut);
    let gradient = grid.gradient_energy(u);
    let mass = grid.weighted_dot(u, u);
    let nonlinear = match p {
        Some(p) => (0..grid.last()).map(|j| grid.weight(j) * nonlinear_density(u[j], p)).sum(),
        None => 0.0,
    };
    let potential = mass + nonlinear;
    let total = kinetic + gradient + potential;
    EnergyBreakdown {
        kinetic,
        gradient,
        mass,
        nonlinear,
        potential,
        total,
        criticality: Criticality::classify(total),
    }
}

/// Discrete energy of the nonlinear equation.
pub fn energy(state: &KGState) -> EnergyBreakdown {
    breakdown(&state.grid, &state.u, &state.ut, Some(state.p))
}

/// Discrete energy of the free equation `□v + v = 0`.
pub fn free_energy(state: &KGState) -> EnergyBreakdown {
    breakdown(&state.grid, &state.u, &state.ut, None)
}

/// Initial data `(u₀, u₁)` sampled on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub grid: RadialGrid,
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
}

impl CauchyData {
    pub fn from_fns(grid: RadialGrid, u0: impl Fn(f64) -> f64, u1: impl Fn(f64) -> f64) -> Self {
        CauchyData { grid, u0: grid.sample(u0), u1: grid.sample(u1) }
    }

    pub fn from_shapes(grid: RadialGrid, u0: Option<RadialShape>, u1: Option<RadialShape>) -> Self {
        let eval = |s: Option<RadialShape>| move |r: f64| s.map_or(0.0, |s| s.eval(r));
        Self::from_fns(grid, eval(u0), eval(u1))
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self::from_fns(grid, |_| 0.0, |_| 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        CauchyData {
            grid: self.grid,
            u0: self.u0.iter().map(|v| c * v).collect(),
            u1: self.u1.iter().map(|v| c * v).collect(),
        }
    }

    /// Largest node radius carrying nonzero data.
    pub fn support_radius(&self) -> f64 {
        (0..self.grid.nodes())
            .rev()
            .find(|&j| self.u0[j] != 0.0 || self.u1[j] != 0.0)
            .map_or(0.0, |j| self.grid.r(j))
    }

    pub fn state(&self, p: u32) -> Result<KGState> {
        KGState::new(self.grid, p, self.u0.clone(), self.u1.clone())
    }
}

/// Time stepping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KgConfig {
    pub p: u32,
    pub dt: f64,
    pub t_final: f64,
    pub save_every: usize,
}

impl KgConfig {
    pub fn new(p: u32, dt: f64, t_final: f64) -> Self {
        KgConfig { p, dt, t_final, save_every: 16 }
    }

    pub fn validate(&self, grid: &RadialGrid) -> Result<()> {
        if self.p < 1 {
            return Err(LabError::InvalidArgument(format!("p = {} < 1", self.p)));
        }
        if !(self.dt > 0.0 && self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(LabError::InvalidArgument(format!("dt = {}, T = {}", self.dt, self.t_final)));
        }
        if self.save_every == 0 {
            return Err(LabError::InvalidArgument("save_every = 0".into()));
        }
        let bound = CFL * grid.dr();
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(LabError::Cfl { dt: self.dt, bound });
        }
        Ok(())
    }

    /// Number of steps and the step actually used, `T/steps ≤ dt`.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, self.dt);
        }
        let n = (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }
}

/// Velocity Verlet integrator for one equation on one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: RadialGrid,
    p: u32,
    free: bool,
    inv_w: Vec<f64>,
    acc: Vec<f64>,
    acc_valid: bool,
}

impl Stepper {
    pub fn new(grid: RadialGrid, p: u32, free: bool) -> Self {
        let inv_w = (0..grid.nodes()).map(|j| 1.0 / grid.weight(j)).collect();
        Stepper { grid, p, free, inv_w, acc: vec![0.0; grid.nodes()], acc_valid: false }
    }

    fn accelerate(&mut self, u: &[f64], t: f64) -> Result<()> {
        let g = &self.grid;
        let n = g.last();
        let mut flux_in = 0.0;
        for j in 0..n {
            let flux_out = g.face(j) * (u[j + 1] - u[j]);
            let mut a = (flux_out - flux_in) * self.inv_w[j] - u[j];
            if !self.free {
                a -= f_p(u[j], self.p).map_err(|_| LabError::NonlinearOverflow { t, r: g.r(j), u: u[j] })?;
            }
            self.acc[j] = a;
            flux_in = flux_out;
        }
        self.acc[n] = 0.0;
        self.acc_valid = true;
        Ok(())
    }

    /// Advances `state` by `dt`.
    pub fn step(&mut self, state: &mut KGState, dt: f64) -> Result<()> {
        if state.grid != self.grid {
            return Err(LabError::GridMismatch("state and stepper grids differ".into()));
        }
        if !self.acc_valid {
            self.accelerate(&state.u, state.t)?;
        }
        let half = 0.5 * dt;
        for ((u, ut), a) in state.u.iter_mut().zip(&mut state.ut).zip(&self.acc) {
            *ut += half * a;
            *u += dt * *ut;
        }
        state.t += dt;
        self.accelerate(&state.u, state.t)?;
        for (ut, a) in state.ut.iter_mut().zip(&self.acc) {
            *ut += half * a;
        }
        Ok(())
    }

    /// Discards the cached acceleration, needed after the state is modified
    /// outside [`Stepper::step`].
    pub fn invalidate(&mut self) {
        self.acc_valid = false;
    }
}

/// One Verlet step of the nonlinear equation.
pub fn step_nonlinear(state: &KGState, dt: f64) -> Result<KGState> {
    let mut next = state.clone();
    Stepper::new(state.grid, state.p, false).step(&mut next, dt)?;
    Ok(next)
}

/// One Verlet step of the free equation.
pub fn step_free(state: &KGState, dt: f64) -> Result<KGState> {
    let mut next = state.clone();
    Stepper::new(state.grid, state.p, true).step(&mut next, dt)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: RadialGrid,
    pub p: u32,
    pub free: bool,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
    pub energies: Vec<EnergyBreakdown>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn state(&self, k: usize) -> KGState {
        let s = &self.snapshots[k];
        KGState { grid: self.grid, t: s.t, p: self.p, u: s.u.clone(), ut: s.ut.clone() }
    }

    pub fn last_state(&self) -> KGState {
        self.state(self.snapshots.len() - 1)
    }

    /// Largest `|E(t) − E(0)|/E(0)` over the snapshots.
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energies[0].total;
        if e0 == 0.0 {
            return 0.0;
        }
        self.energies.iter().map(|e| (e.total - e0).abs() / e0).fold(0.0, f64::max)
    }
}

fn run(data: &CauchyData, cfg: &KgConfig, free: bool) -> Result<Trajectory> {
    let grid = data.grid;
    cfg.validate(&grid)?;
    let cap = grid.radius() - cfg.t_final;
    if data.support_radius() > cap {
        return Err(LabError::InvalidArgument(format!(
            "data supported up to r = {} but must vanish beyond R − T = {cap}",
            data.support_radius()
        )));
    }
    let mut state = data.state(cfg.p)?;
    let (steps, dt) = cfg.steps();
    let mut stepper = Stepper::new(grid, cfg.p, free);
    let record = |s: &KGState| if free { free_energy(s) } else { energy(s) };
    let snap = |s: &KGState| Snapshot { t: s.t, u: s.u.clone(), ut: s.ut.clone() };
    let mut snapshots = vec![snap(&state)];
    let mut energies = vec![record(&state)];
    for k in 1..=steps {
        stepper.step(&mut state, dt)?;
        if k % cfg.save_every == 0 || k == steps {
            snapshots.push(snap(&state));
            energies.push(record(&state));
        }
    }
    Ok(Trajectory { grid, p: cfg.p, free, dt, snapshots, energies })
}

/// Evolves the nonlinear equation, saving every `save_every` steps and at `T`.
pub fn evolve(data: &CauchyData, cfg: &KgConfig) -> Result<Trajectory> {
    run(data, cfg, false)
}

/// Evolves the free equation with the same data and schedule.
pub fn evolve_free(data: &CauchyData, cfg: &KgConfig) -> Result<Trajectory> {
    run(data, cfg, true)
}
