//! Radial functions on the plane in log-radial coordinates.
//!
//! A radial `u` is stored as `v(s) = u(e^{-s})` on a uniform grid. Below
//! `s_min` (large radii) the field is zero; above `s_max` (the origin side)
//! it is continued by its last value. In these coordinates
//!
//! * `∫|∇u|² dx = 2π ∫ v'(s)² ds`
//! * `∫|u|^q dx = 2π ∫ |v(s)|^q e^{-2s} ds`

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{LabError, Result};
use crate::quadrature::{self, LogIntegrand, Power};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRadialField {
    s_min: f64,
    ds: f64,
    values: Vec<f64>,
}

impl LogRadialField {
    pub fn new(s_min: f64, ds: f64, values: Vec<f64>) -> Result<Self> {
        if !(ds > 0.0 && ds.is_finite()) {
            return Err(LabError::InvalidArgument(format!("grid step ds = {ds}")));
        }
        if !s_min.is_finite() {
            return Err(LabError::InvalidArgument(format!("s_min = {s_min}")));
        }
        if values.len() < 2 {
            return Err(LabError::InvalidArgument("a field needs at least two grid nodes".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument(format!("non-finite value at node {i}")));
        }
        Ok(LogRadialField { s_min, ds, values })
    }

    /// Samples `f` on `s_min + i·ds` for `i = 0..n`.
    pub fn from_fn(s_min: f64, ds: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..n).map(|i| f(s_min + i as f64 * ds)).collect();
        Self::new(s_min, ds, values)
    }

    pub fn zeros(s_min: f64, ds: f64, n: usize) -> Result<Self> {
        Self::new(s_min, ds, vec![0.0; n])
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s(self.values.len() - 1)
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        self.s_min + i as f64 * self.ds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at the origin side, i.e. the constant continuation past `s_max`.
    pub fn tail_value(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Piecewise-linear evaluation with the grid extension conventions.
    pub fn value_at(&self, s: f64) -> f64 {
        if s < self.s_min {
            return 0.0;
        }
        let x = (s - self.s_min) / self.ds;
        let last = self.values.len() - 1;
        if x >= last as f64 {
            return self.values[last];
        }
        let i = x.floor() as usize;
        let t = x - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Value of `u` at radius `r > 0`.
    pub fn value_at_radius(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.tail_value();
        }
        self.value_at(-r.ln())
    }

    pub fn scaled(&self, c: f64) -> Self {
        LogRadialField { s_min: self.s_min, ds: self.ds, values: self.values.iter().map(|v| c * v).collect() }
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        let tol = 1e-12 * self.ds;
        if self.values.len() != other.values.len()
            || (self.ds - other.ds).abs() > tol
            || (self.s_min - other.s_min).abs() > tol.max(1e-14 * self.s_min.abs())
        {
            return Err(LabError::GridMismatch(format!(
                "grids ({}, {}, {}) and ({}, {}, {})",
                self.s_min,
                self.ds,
                self.values.len(),
                other.s_min,
                other.ds,
                other.values.len()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(LogRadialField { s_min: self.s_min, ds: self.ds, values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(LogRadialField { s_min: self.s_min, ds: self.ds, values })
    }

    /// `2π ∫ F(v(s)) e^{-2s} ds`, i.e. `∫ F(u) dx`.
    pub fn integral<F: LogIntegrand>(&self, f: &F) -> f64 {
        TWO_PI * quadrature::integrate(self.s_min, self.ds, &self.values, f)
    }

    /// `‖∇u‖²_{L²} = 2π Σ (Δv)²/ds`, exact for the piecewise-linear interpolant.
    /// A jump at `s_min` (nonzero first value) is not counted.
    pub fn grad_l2_norm_sq(&self) -> f64 {
        let sum: f64 = self.values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        TWO_PI * sum / self.ds
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.lq_norm_pow(2.0)
    }

    /// `∫|u|^q dx`.
    pub fn lq_norm_pow(&self, q: f64) -> f64 {
        self.integral(&Power(q))
    }

    pub fn lq_norm(&self, q: f64) -> f64 {
        self.lq_norm_pow(q).powf(1.0 / q)
    }

    pub fn h1_norm(&self) -> f64 {
        (self.grad_l2_norm_sq() + self.l2_norm_sq()).sqrt()
    }

    /// Largest `|v|` over the grid, i.e. `‖u‖_{L^∞}`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Checks the support convention: `|v(s_min)|` and the last cell
    /// difference must both be below `tol`.
    pub fn support_ok(&self, tol: f64) -> bool {
        let n = self.values.len();
        self.values[0].abs() <= tol && (self.values[n - 1] - self.values[n - 2]).abs() <= tol
    }

    /// Same field re-expressed on a grid extended by `extra` nodes past
    /// `s_max`, filled with the tail value.
    pub fn extended(&self, extra: usize) -> Self {
        let mut values = self.values.clone();
        let t = self.tail_value();
        values.extend(std::iter::repeat_n(t, extra));
        LogRadialField { s_min: self.s_min, ds: self.ds, values }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["s", "v"])?;
        for (i, v) in self.values.iter().enumerate() {
            wr.write_record([self.s(i).to_string(), v.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "s" || &headers[1] != "v" {
            return Err(LabError::Parse(format!("expected header `s,v`, got {headers:?}")));
        }
        let (s, v) = read_two_columns(&mut rd)?;
        let ds = check_uniform(&s)?;
        Self::new(s[0], ds, v)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

pub(crate) fn read_two_columns<R: Read>(rd: &mut csv::Reader<R>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(LabError::Parse(format!("row {}: expected 2 columns", line + 2)));
        }
        let parse =
            |x: &str| x.parse::<f64>().map_err(|e| LabError::Parse(format!("row {}: {e}: {x:?}", line + 2)));
        a.push(parse(&rec[0])?);
        b.push(parse(&rec[1])?);
    }
    Ok((a, b))
}

/// Returns the spacing of an increasing uniform grid.
pub(crate) fn check_uniform(s: &[f64]) -> Result<f64> {
    if s.len() < 2 {
        return Err(LabError::Parse("need at least two rows".into()));
    }
    let n = s.len() - 1;
    let ds = (s[n] - s[0]) / n as f64;
    if !(ds > 0.0) {
        return Err(LabError::Parse("grid is not increasing".into()));
    }
    for (i, &si) in s.iter().enumerate() {
        let expect = s[0] + i as f64 * ds;
        let tol = 1e-12 * ds + 4.0 * f64::EPSILON * si.abs().max(s[0].abs());
        if (si - expect).abs() > tol {
            return Err(LabError::Parse(format!("grid is not uniform at row {}: {si} vs {expect}", i + 2)));
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moser_gradient_is_one() {
        let ds = 1.0 / 64.0;
        let f = LogRadialField::from_fn(-1.0, ds, 3 * 64 + 1, |s| s.clamp(0.0, 1.0) / TWO_PI.sqrt()).unwrap();
        assert!((f.grad_l2_norm_sq() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn unit_disk_lq_norm() {
        let f = LogRadialField::from_fn(0.0, 1.0 / 256.0, 10, |_| 1.0).unwrap();
        for q in [1.0, 2.0, 3.5, 8.0] {
            let want = std::f64::consts::PI.powf(1.0 / q);
            assert!((f.lq_norm(q) - want).abs() < 1e-13 * want, "q = {q}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let f = LogRadialField::from_fn(-3.25, 1.0 / 256.0, 2000, |s| (s * 0.7).sin()).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = LogRadialField::read_csv(buf.as_slice()).unwrap();
        assert_eq!(f.len(), g.len());
        assert!((f.ds() - g.ds()).abs() < 1e-15);
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn non_uniform_csv_is_rejected() {
        let text = "s,v\n0,1\n0.1,1\n0.25,1\n";
        assert!(matches!(LogRadialField::read_csv(text.as_bytes()), Err(LabError::Parse(_))));
    }

    #[test]
    fn evaluation_conventions() {
        let f = LogRadialField::from_fn(0.0, 0.5, 5, |s| s).unwrap();
        assert_eq!(f.value_at(-0.1), 0.0);
        assert_eq!(f.value_at(0.75), 0.75);
        assert_eq!(f.value_at(10.0), 2.0);
        assert_eq!(f.value_at_radius(0.0), 2.0);
    }
}
