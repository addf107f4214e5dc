use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("argument {arg} = {value} overflows the exponential range")]
    Overflow { arg: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bisection did not converge after {iterations} bracket steps")]
    NonConvergence { iterations: u32 },

    #[error("grid budget exceeded: {samples} samples requested, cap is {cap}")]
    GridBudget { samples: usize, cap: usize },

    #[error("degenerate field: {0}")]
    Degenerate(String),

    #[error("time step dt = {dt} violates the CFL bound dt <= {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("nonlinearity overflow at t = {t}, r = {r}, u = {u}")]
    NonlinearOverflow { t: f64, r: f64, u: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => LabError::Io(io),
            other => LabError::Parse(format!("{other:?}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
