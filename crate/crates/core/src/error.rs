use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("{what}: argument {value} outside domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    /// Momentum beyond the sharp cut-off; the caller decides whether this is fatal.
    #[error("momentum {p} is outside the band |p| <= {lambda}")]
    OutOfBand { p: f64, lambda: f64 },

    /// Adaptive quadrature ran out of subdivisions before reaching the tolerance.
    #[error("{what}: tolerance {requested:e} not reached, achieved {achieved:e} after {intervals} intervals")]
    Convergence {
        what: &'static str,
        requested: f64,
        achieved: f64,
        intervals: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Fixed-point iteration refused or failed.
    #[error("fixed point: {0}")]
    FixedPoint(String),

    /// Several grid points failed; indices refer to the input grid.
    #[error("{} of the grid points failed, first at index {}: {}", .0.len(), .0[0].0, .0[0].1)]
    Aggregate(Vec<(usize, Box<Error>)>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, domain: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value,
            domain: domain.into(),
        }
    }

    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Convergence { .. } | Error::FixedPoint(_) | Error::Invariant(_) => true,
            Error::Aggregate(v) => v.iter().any(|(_, e)| e.is_numerical()),
            _ => false,
        }
    }
}
