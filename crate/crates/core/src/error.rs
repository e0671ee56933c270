use thiserror::Error;

/// Errors produced by the imputation, analysis, and pooling routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("column `{column}` has {observed} observed value(s); at least 2 are required")]
    UnusableColumn { column: String, observed: usize },

    #[error("sweep pivot {index} is not positive ({value:e})")]
    SingularPivot { index: usize, value: f64 },

    #[error("covariance matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("design matrix is rank deficient (column `{0}`)")]
    Collinear(String),

    #[error("at least 2 imputations are required, got {0}")]
    TooFewImputations(usize),

    #[error("every outcome value was imputed; nothing is left after deletion")]
    AllOutcomesImputed,

    #[error("only {observed} row(s) have an observed outcome; more than {required} are required")]
    TooFewObservedOutcomes { observed: usize, required: usize },

    #[error("deletion rate {0} is outside [0, 0.5]")]
    InvalidRate(f64),

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
