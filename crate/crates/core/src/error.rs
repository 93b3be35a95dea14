use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes. The CLI maps these onto its exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse { path: PathBuf, row: usize, column: String, message: String },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("rank-deficient basis: {distinct} distinct values cannot support {requested} basis functions")]
    RankDeficient { distinct: usize, requested: usize },

    #[error("singular design: collinear terms [{}]", .terms.join(", "))]
    SingularDesign { terms: Vec<String> },

    #[error("iterative fit did not converge: {0}")]
    NonConvergence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("LASER sampler: acceptance rate {rate:.3e} after {proposals} proposals")]
    PathologicalDensity { rate: f64, proposals: u64 },

    #[error("{failed} of {total} resampling cycles failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidInput(_) => ErrorClass::Usage,
            Error::Parse { .. } | Error::Csv { .. } | Error::Io(_) | Error::Json(_) => ErrorClass::Data,
            Error::RankDeficient { .. }
            | Error::SingularDesign { .. }
            | Error::NonConvergence(_)
            | Error::Numerical(_)
            | Error::PathologicalDensity { .. }
            | Error::TooManyFailures { .. } => ErrorClass::Numerical,
        }
    }
}
