//! Numerical laboratory for Orlicz norms of radial functions in the plane,
//! Trudinger–Moser functionals, profile decompositions of critical Sobolev
//! sequences and the radial Klein–Gordon equation with exponential
//! nonlinearity.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extraction;
pub mod field;
pub mod fixtures;
pub mod kg;
pub mod orlicz;
pub mod profiles;
pub mod quadrature;
pub mod rearrange;

pub use error::{LabError, Result};
pub use field::LogRadialField;
pub use orlicz::{luxemburg_norm, phi_p, tm_functional, OrliczParams};
pub use profiles::{ConcentrationTriplet, Profile};
pub use rearrange::Field2D;
