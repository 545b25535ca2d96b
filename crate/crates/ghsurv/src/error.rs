use thiserror::Error;

/// Library-wide error type.
///
/// `Domain` marks parameter vectors outside the family's domain (for example a
/// non-positive shape), which is distinct from a valid parameter point whose
/// log-likelihood is `-inf`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid dataset: {0}")]
    Data(String),

    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("optimization failed to converge: {0}")]
    NonConvergence(String),

    #[error("quadrature failed: {0}")]
    Integration(String),

    #[error("numeric inversion failed: {0}")]
    Inversion(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("diagnostic error: {0}")]
    Diagnostic(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code: 2 for input problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Shape(_) | Error::Data(_) | Error::Ingestion(_)
            | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 2,
            Error::NonConvergence(_) | Error::Integration(_) | Error::Inversion(_)
            | Error::Sampling(_) | Error::Diagnostic(_) => 3,
        }
    }
}
