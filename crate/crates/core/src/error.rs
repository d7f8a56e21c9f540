use thiserror::Error;

/// Errors raised by the numerical kernels and the model layers built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not special unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e})")]
    NotPositiveDefinite { pivot: f64 },

    #[error("matrix is not upper unipotent (deviation {deviation:.3e})")]
    NotUnipotent { deviation: f64 },

    #[error("matrix is not a Borel element: {0}")]
    NotBorel(String),

    #[error("torus point is not regular: minimal gap {min_gap:.3e} below tolerance {tolerance:.3e}")]
    NonRegularTorus { min_gap: f64, tolerance: f64 },

    #[error("decomposition failed: {0}")]
    DecompositionFailure(String),

    #[error("index pair ({row}, {col}) is not in the upper triangle of a {n}x{n} matrix")]
    IndexOutOfStructure { row: usize, col: usize, n: usize },

    #[error("{what}: {value:.3e} exceeds bound {bound:.3e}")]
    ToleranceExceeded {
        what: String,
        value: f64,
        bound: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
