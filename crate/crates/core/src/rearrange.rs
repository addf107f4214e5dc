//! Cartesian samples and their symmetric decreasing rearrangement.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{LabError, Result};
use crate::field::LogRadialField;
use crate::orlicz::{ln_phi, luxemburg_root, Bisection, OrliczParams};

/// Samples `values[j·nx + i] = f(ox + i·h, oy + j·h)` on a square-cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(nx: usize, ny: usize, h: f64, origin: [f64; 2], values: Vec<f64>) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(LabError::InvalidArgument(format!("grid {nx}x{ny} too small")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(LabError::InvalidArgument(format!("h = {h}")));
        }
        if values.len() != nx * ny {
            return Err(LabError::InvalidArgument(format!("{} values for a {nx}x{ny} grid", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument("non-finite sample".into()));
        }
        Ok(Field2D { nx, ny, h, origin, values })
    }

    pub fn from_fn(
        nx: usize,
        ny: usize,
        h: f64,
        origin: [f64; 2],
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(origin[0] + i as f64 * h, origin[1] + j as f64 * h));
            }
        }
        Self::new(nx, ny, h, origin, values)
    }

    /// Square grid of side `2·half_width` centred at the origin.
    pub fn centered(half_width: f64, h: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = (2.0 * half_width / h).round() as usize + 1;
        let o = -((n - 1) as f64) * h / 2.0;
        Self::from_fn(n, n, h, [o, o], f)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// The outermost ring of samples is identically zero.
    pub fn boundary_is_zero(&self) -> bool {
        let (nx, ny) = (self.nx, self.ny);
        (0..nx).all(|i| self.at(i, 0) == 0.0 && self.at(i, ny - 1) == 0.0)
            && (0..ny).all(|j| self.at(0, j) == 0.0 && self.at(nx - 1, j) == 0.0)
    }

    /// `Σ |f|^q h²`.
    pub fn lq_norm_pow(&self, q: f64) -> f64 {
        self.values.iter().map(|v| v.abs().powf(q)).sum::<f64>() * self.cell_area()
    }

    /// Forward-difference Dirichlet energy `Σ (Δ_x f)² + (Δ_y f)²`.
    pub fn grad_l2_norm_sq(&self) -> f64 {
        let mut sum = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = self.at(i, j);
                if i + 1 < self.nx {
                    sum += (self.at(i + 1, j) - v).powi(2);
                }
                if j + 1 < self.ny {
                    sum += (self.at(i, j + 1) - v).powi(2);
                }
            }
        }
        sum
    }

    /// Luxemburg norm by midpoint quadrature over the cells.
    pub fn luxemburg_norm(&self, params: &OrliczParams) -> Result<f64> {
        params.validate()?;
        if self.values.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        let area = self.cell_area();
        let g = |lambda: f64| {
            let inv = 1.0 / lambda;
            self.values.iter().map(|v| ln_phi(v * inv, params.p).exp()).sum::<f64>() * area
        };
        let h1 = (self.grad_l2_norm_sq() + self.lq_norm_pow(2.0)).sqrt();
        luxemburg_root(g, params.kappa, h1, &Bisection::default())
    }

    /// `|{|f| > t}|` as a cell count times `h²`.
    pub fn level_measure(&self, t: f64) -> f64 {
        self.values.iter().filter(|v| v.abs() > t).count() as f64 * self.cell_area()
    }

    /// Cells of `{|f| > t}` with a 4-neighbour outside the set.
    pub fn level_boundary_cells(&self, t: f64) -> usize {
        let inside = |i: isize, j: isize| {
            i >= 0
                && j >= 0
                && (i as usize) < self.nx
                && (j as usize) < self.ny
                && self.at(i as usize, j as usize).abs() > t
        };
        let mut count = 0;
        for j in 0..self.ny as isize {
            for i in 0..self.nx as isize {
                if inside(i, j)
                    && !(inside(i + 1, j) && inside(i - 1, j) && inside(i, j + 1) && inside(i, j - 1))
                {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "nx,ny,h,ox,oy")?;
        writeln!(w, "{},{},{},{},{}", self.nx, self.ny, self.h, self.origin[0], self.origin[1])?;
        let mut line = String::new();
        for j in 0..self.ny {
            line.clear();
            for i in 0..self.nx {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&self.at(i, j).to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| LabError::Parse("unexpected end of Field2D file".into()))?
                .map_err(LabError::from)
        };
        let header = next()?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["nx", "ny", "h", "ox", "oy"] {
            return Err(LabError::Parse(format!("expected header `nx,ny,h,ox,oy`, got {header:?}")));
        }
        let meta = next()?;
        let m: Vec<&str> = meta.split(',').map(str::trim).collect();
        if m.len() != 5 {
            return Err(LabError::Parse("grid line needs 5 fields".into()));
        }
        let pu = |s: &str| s.parse::<usize>().map_err(|e| LabError::Parse(format!("{e}: {s:?}")));
        let pf = |s: &str| s.parse::<f64>().map_err(|e| LabError::Parse(format!("{e}: {s:?}")));
        let (nx, ny) = (pu(m[0])?, pu(m[1])?);
        let (h, ox, oy) = (pf(m[2])?, pf(m[3])?, pf(m[4])?);
        let mut values = Vec::with_capacity(nx * ny);
        while let Ok(line) = next() {
            for tok in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                values.push(pf(tok)?);
            }
        }
        Self::new(nx, ny, h, [ox, oy], values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Default log-radial step of the rearranged output.
pub const REARRANGE_DS: f64 = 1.0 / 64.0;

/// Fritsch–Carlson slopes for nondecreasing data.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let secant: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
    let mut d = vec![0.0; n];
    d[0] = secant[0];
    d[n - 1] = secant[n - 2];
    for k in 1..n - 1 {
        let (a, b) = (secant[k - 1], secant[k]);
        if a * b > 0.0 {
            let (h0, h1) = (x[k] - x[k - 1], x[k + 1] - x[k]);
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Symmetric decreasing rearrangement with output step `ds`.
pub fn symmetric_decreasing_rearrangement_with(f: &Field2D, ds: f64) -> Result<LogRadialField> {
    if !(ds > 0.0) {
        return Err(LabError::InvalidArgument(format!("ds = {ds}")));
    }
    let mut mags: Vec<f64> = f.values.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    if mags.is_empty() {
        return LogRadialField::zeros(0.0, ds, 2);
    }
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let area = f.cell_area();
    let pi = std::f64::consts::PI;
    let n = mags.len();

    // Knots in increasing s: the support edge, then the mean value of each
    // ring of width h (sorted cells k with π(m−1)² ≤ k < πm²) at the ring's
    // mid-measure, then the maximum at measure h²/2.
    let mut bounds = vec![0usize];
    let mut m = 1.0f64;
    while *bounds.last().unwrap() < n {
        bounds.push(((pi * m * m).ceil() as usize).min(n));
        m += 1.0;
    }
    let mut xs = Vec::with_capacity(bounds.len() + 2);
    let mut ys = Vec::with_capacity(bounds.len() + 2);
    let s_edge = -0.5 * (n as f64 * area / pi).ln();
    xs.push(s_edge);
    ys.push(0.0);
    for w in bounds.windows(2).rev() {
        let (a, b) = (w[0], w[1]);
        let mean = mags[a..b].iter().sum::<f64>() / (b - a) as f64;
        let x = -0.5 * (0.5 * (a + b) as f64 * area / pi).ln();
        if x > *xs.last().unwrap() {
            xs.push(x);
            ys.push(mean.min(mags[a]).max(*ys.last().unwrap()));
        }
    }
    let x_top = -0.5 * (0.5 * area / pi).ln();
    if x_top > *xs.last().unwrap() {
        xs.push(x_top);
        ys.push(mags[0]);
    } else {
        *ys.last_mut().unwrap() = mags[0];
    }
    let d = monotone_slopes(&xs, &ys);

    let s_top = *xs.last().unwrap();
    let count = ((s_top - s_edge) / ds).ceil() as usize + 3;
    let mut values = Vec::with_capacity(count);
    let mut k = 0;
    for i in 0..count {
        let s = s_edge + i as f64 * ds;
        if s >= s_top {
            values.push(mags[0]);
            continue;
        }
        while xs[k + 1] < s {
            k += 1;
        }
        let v = hermite(xs[k], xs[k + 1], ys[k], ys[k + 1], d[k], d[k + 1], s);
        values.push(v.clamp(ys[k], ys[k + 1]));
    }
    LogRadialField::new(s_edge, ds, values)
}

pub fn symmetric_decreasing_rearrangement(f: &Field2D) -> Result<LogRadialField> {
    symmetric_decreasing_rearrangement_with(f, REARRANGE_DS)
}

/// Dirichlet energies of `f` and of its rearrangement.
pub fn polya_szego_check(f: &Field2D) -> Result<(f64, f64)> {
    let star = symmetric_decreasing_rearrangement(f)?;
    Ok((f.grad_l2_norm_sq(), star.grad_l2_norm_sq()))
}

/// `|{f* > t}|` read off a non-increasing radial field.
pub fn radial_level_measure(star: &LogRadialField, t: f64) -> f64 {
    let v = star.values();
    let Some(i) = v.iter().position(|&x| x > t) else {
        return 0.0;
    };
    let s_t = if i == 0 {
        star.s_min()
    } else {
        let (a, b) = (v[i - 1], v[i]);
        star.s(i - 1) + star.ds() * (t - a) / (b - a)
    };
    std::f64::consts::PI * (-2.0 * s_t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let f = Field2D::centered(0.5, 0.1, |x, y| (x * 3.0).sin() * y).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = Field2D::read_csv(buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn zero_field_rearranges_to_zero() {
        let f = Field2D::centered(0.5, 0.1, |_, _| 0.0).unwrap();
        assert!(symmetric_decreasing_rearrangement(&f).unwrap().is_zero());
    }

    #[test]
    fn rearrangement_is_monotone() {
        let f = Field2D::centered(1.0, 0.02, |x, y| {
            let a = (-((x - 0.3).powi(2) + y * y) / 0.02).exp();
            let b = 0.5 * (-((x + 0.4).powi(2) + (y - 0.2).powi(2)) / 0.05).exp();
            a + b
        })
        .unwrap();
        let star = symmetric_decreasing_rearrangement(&f).unwrap();
        assert!(star.values().windows(2).all(|w| w[1] >= w[0]));
    }
}
