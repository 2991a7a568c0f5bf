use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("singular normal-equation system: factorization failed at pivot {pivot}")]
    SingularSystem { pivot: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate data: {what} component {component} has zero variance")]
    DegenerateData {
        what: &'static str,
        component: usize,
    },

    #[error(
        "quadrature did not converge: relative change {achieved:e} after {refinements} refinements"
    )]
    Accuracy { achieved: f64, refinements: usize },

    #[error("image: {0}")]
    Image(String),

    #[error("file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
