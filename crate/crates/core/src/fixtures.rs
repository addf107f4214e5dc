//! Standard radial fixtures and their Cartesian materializations.

use crate::error::{LabError, Result};
use crate::field::LogRadialField;
use crate::profiles::{bubble_value, Profile};
use crate::rearrange::Field2D;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Profile of a radial fixture as a function of `r`, with its support radius
/// (infinite for Gaussians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialShape {
    /// `amp·e^{−r²/σ²}`
    Gaussian { amp: f64, sigma: f64 },
    /// `amp·(1 − r²/ρ²)²₊`
    Bump { amp: f64, radius: f64 },
    /// `amp·e^{1 − 1/(1 − r²/ρ²)}` inside `ρ`
    SmoothBump { amp: f64, radius: f64 },
    /// `(1/√(2πa))·min(ln(ρ/r), a)₊`, unit Dirichlet energy
    Moser { a: f64, radius: f64 },
    /// `amp` on the disk of radius `ρ`
    Disk { amp: f64, radius: f64 },
}

impl RadialShape {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            RadialShape::Gaussian { amp, sigma } => amp * (-(r * r) / (sigma * sigma)).exp(),
            RadialShape::Bump { amp, radius } => {
                let t = 1.0 - (r / radius).powi(2);
                if t > 0.0 {
                    amp * t * t
                } else {
                    0.0
                }
            }
            RadialShape::SmoothBump { amp, radius } => {
                let t = 1.0 - (r / radius).powi(2);
                if t > 0.0 {
                    amp * (1.0 - 1.0 / t).exp()
                } else {
                    0.0
                }
            }
            RadialShape::Moser { a, radius } => {
                if r <= 0.0 {
                    return a.sqrt() / TWO_PI.sqrt();
                }
                (radius / r).ln().clamp(0.0, a) / (TWO_PI * a).sqrt()
            }
            RadialShape::Disk { amp, radius } => {
                if r <= radius {
                    amp
                } else {
                    0.0
                }
            }
        }
    }

    fn eval_log(&self, s: f64) -> f64 {
        match *self {
            // avoid e^{-s} underflow for large s
            RadialShape::Gaussian { amp, sigma } => amp * (-(-2.0 * s).exp() / (sigma * sigma)).exp(),
            RadialShape::Moser { a, radius } => (s + radius.ln()).clamp(0.0, a) / (TWO_PI * a).sqrt(),
            _ => self.eval((-s).exp()),
        }
    }

    /// Outer radius beyond which the fixture is (numerically) zero.
    pub fn support_radius(&self) -> f64 {
        match *self {
            RadialShape::Gaussian { sigma, .. } => sigma * 40f64.sqrt(),
            RadialShape::Bump { radius, .. }
            | RadialShape::SmoothBump { radius, .. }
            | RadialShape::Moser { radius, .. }
            | RadialShape::Disk { radius, .. } => radius,
        }
    }

    /// Log-radial samples with step `ds`.
    pub fn log_field(&self, ds: f64) -> Result<LogRadialField> {
        if !(ds > 0.0) {
            return Err(LabError::InvalidArgument(format!("ds = {ds}")));
        }
        let s0 = -self.support_radius().ln();
        let (s_start, s_end) = match *self {
            RadialShape::Disk { .. } => (s0, s0 + ds),
            RadialShape::Moser { a, .. } => (s0 - ds * (1.0 / ds).ceil(), s0 + a + 2.0 * ds),
            RadialShape::Gaussian { sigma, .. } => (s0, 20.0 - sigma.ln()),
            RadialShape::Bump { radius, .. } | RadialShape::SmoothBump { radius, .. } => {
                (s0, 20.0 - radius.ln())
            }
        };
        let n = ((s_end - s_start) / ds).round() as usize + 1;
        LogRadialField::from_fn(s_start, ds, n, |s| self.eval_log(s))
    }

    /// Samples on a square Cartesian grid centred at `center`, zeroing
    /// values below `1e-300`.
    pub fn field_2d(&self, half_width: f64, h: f64, center: [f64; 2]) -> Result<Field2D> {
        Field2D::centered(half_width, h, |x, y| {
            let r = (x - center[0]).hypot(y - center[1]);
            let v = self.eval(r);
            if v.abs() < 1e-300 {
                0.0
            } else {
                v
            }
        })
    }
}

/// A centered bubble `√(α/2π)·ψ(−ln|x − x₀|/α)` on a Cartesian grid.
pub fn bubble_2d(
    profile: &Profile,
    alpha: f64,
    center: [f64; 2],
    half_width: f64,
    h: f64,
) -> Result<Field2D> {
    Field2D::centered(half_width, h, |x, y| {
        let r = (x - center[0]).hypot(y - center[1]);
        if r == 0.0 {
            bubble_value(profile, alpha, f64::MAX)
        } else {
            bubble_value(profile, alpha, -r.ln())
        }
    })
}

/// Twenty radial fixtures mixing Gaussians, Moser fields and bumps.
pub fn fixture_family() -> Vec<RadialShape> {
    let mut out = Vec::new();
    for (amp, sigma) in [(1.0, 0.25), (0.3, 0.5), (2.0, 1.0), (0.5, 2.0), (1.0, 4.0)] {
        out.push(RadialShape::Gaussian { amp, sigma });
    }
    for a in [0.5, 1.0, 2.0, 4.0] {
        for radius in [0.5, 2.0] {
            out.push(RadialShape::Moser { a, radius });
        }
    }
    for (amp, radius) in [(1.0, 0.5), (0.4, 1.0), (1.5, 2.0), (1.0, 4.0)] {
        out.push(RadialShape::Bump { amp, radius });
    }
    for (amp, radius) in [(1.0, 0.5), (0.7, 1.0), (2.0, 3.0)] {
        out.push(RadialShape::SmoothBump { amp, radius });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_has_twenty_members() {
        assert_eq!(fixture_family().len(), 20);
    }

    #[test]
    fn moser_fixture_has_unit_energy() {
        for a in [0.25, 1.0, 3.0] {
            let f = RadialShape::Moser { a, radius: 1.0 }.log_field(1.0 / 256.0).unwrap();
            assert!((f.grad_l2_norm_sq() - 1.0).abs() < 1e-12, "a = {a}");
        }
    }

    #[test]
    fn log_fields_respect_support_convention() {
        for shape in fixture_family() {
            let f = shape.log_field(1.0 / 256.0).unwrap();
            assert!(f.support_ok(1e-6), "{shape:?}");
        }
    }
}
