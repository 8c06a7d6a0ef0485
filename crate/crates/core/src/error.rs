use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("values and mask shapes differ: {values:?} vs {mask:?}")]
    ShapeMismatch {
        values: (usize, usize),
        mask: (usize, usize),
    },
    #[error("response column {0} out of range")]
    InvalidResponse(usize),
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("need at least 2 complete rows, found {found}")]
    InsufficientCompleteRows { found: usize },
    #[error("column pair ({0}, {1}) has fewer than 2 jointly observed rows")]
    EmptyPair(usize, usize),
    #[error("predictor covariance is singular")]
    SingularDesign,
    #[error("sample covariance is singular")]
    SingularCovariance,
    #[error("need more than {needed} rows, found {found}")]
    InsufficientRows { needed: usize, found: usize },
    #[error("kurtosis parameter must exceed -1/2, got {0}")]
    InvalidKappa(f64),
    #[error("observation proportion for columns {0:?} is zero")]
    ZeroProportion(Vec<usize>),
    #[error("invalid missing pattern: {0}")]
    InvalidPattern(String),
    #[error("coefficient index {index} out of range for {p} predictors")]
    InvalidTarget { index: usize, p: usize },
    #[error("interval is empty: sigma1^2 sigma2^2 < 2 sigma12^2, complete-case always wins")]
    EmptyInterval,
    #[error("ellipse is degenerate: constant term of the variance difference is not positive")]
    DegenerateEllipse,
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),
    #[error("infeasible configuration: {0}")]
    InfeasibleConfiguration(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
