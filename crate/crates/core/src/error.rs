use thiserror::Error;

/// Errors raised across the library.
///
/// Divergent integrals are not errors: they come back as `+inf` estimates
/// with a [`crate::quadrature::Status::Divergent`] marker.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation error at r = {r}: {msg}")]
    Evaluation { r: f64, msg: String },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid weight descriptor: {0}")]
    Descriptor(String),

    #[error("quadrature did not reach tolerance (achieved {achieved:e})")]
    Quadrature { achieved: f64 },

    #[error("unsupported iteration depth {n} (maximum {max})")]
    UnsupportedDepth { n: u32, max: u32 },

    #[error("kernel truncation tail bound {bound:e} exceeds tolerance {tol:e}")]
    Truncation { bound: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("lattice covering check failed: point ({re}, {im}) at distance {dist}")]
    Lattice { re: f64, im: f64, dist: f64 },

    #[error("lattice separation check failed: distance {dist} below {min}")]
    Separation { dist: f64, min: f64 },

    #[error("singular value decomposition did not converge")]
    Svd,

    #[error("identity violated: {0}")]
    Invariant(String),

    #[error("invalid symbol: {0}")]
    Symbol(String),
}

pub type Result<T> = std::result::Result<T, Error>;
