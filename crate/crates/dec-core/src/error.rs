use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum DecError {
    #[error("degenerate simplex: {0}")]
    DegenerateSimplex(String),

    #[error("empty complex: no top simplices were supplied")]
    EmptyComplex,

    #[error("degree {degree} out of range for dimension {dimension}")]
    Degree { degree: usize, dimension: usize },

    #[error("degenerate grid: every extent must be at least 2, got {0:?}")]
    DegenerateGrid(Vec<usize>),

    #[error("axis {axis} out of range for dimension {dimension}")]
    Axis { axis: usize, dimension: usize },

    #[error(
        "sampling saturated after {retries} retries while placing point {point} of {total}; \
         reduce the point count or the separation radius"
    )]
    SamplingSaturation {
        point: usize,
        total: usize,
        retries: usize,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("singular Hodge star at degree {degree}: zero dual volume on simplices {ranks:?}")]
    SingularHodge { degree: usize, ranks: Vec<usize> },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("all simplices of degree {degree} lie on the boundary; interior is empty")]
    AllBoundary { degree: usize },

    #[error("underdetermined least-squares system: {0}")]
    Underdetermined(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error(
        "eigensolver did not converge within {iterations} iterations; \
         worst residual {worst_residual:.3e} (tolerance {tolerance:.3e})"
    )]
    Convergence {
        iterations: usize,
        worst_residual: f64,
        tolerance: f64,
    },

    #[error("metric is not Hermitian: max asymmetry {0:.3e}")]
    NonHermitianMetric(f64),

    #[error("mass matrix is not positive definite on the masked subspace (entry {index}: {value:.3e})")]
    NonPositiveMass { index: usize, value: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(#[from] serde_json::Error),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, DecError>;
