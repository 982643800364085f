use thiserror::Error;

/// Coarse error class, used by the command-line driver to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numeric,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has no areas")]
    EmptyGraph,
    #[error("adjacency matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("adjacency matrix is asymmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("adjacency matrix entry ({0}, {1}) is not 0 or 1")]
    NonBinary(usize, usize),
    #[error("self-loop on area {0}")]
    SelfLoop(usize),
    #[error("area index {index} out of range for {n} areas")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("duplicate area id `{0}`")]
    DuplicateAreaId(String),
    #[error("unknown area id `{0}`")]
    UnknownAreaId(String),
    #[error("covariate matrix has {got} rows, expected {expected}")]
    CovariateShape { got: usize, expected: usize },
    #[error("metric `{metric}` has a missing or non-finite value for area {area}")]
    MissingValue { metric: String, area: usize },
    #[error("metric `{0}` has zero standard deviation across borders")]
    ConstantMetric(String),
    #[error("metric `{0}` needs at least two borders to standardise")]
    TooFewBorders(String),
    #[error("metric `{0}` is zero on every border")]
    AllZeroMetric(String),
    #[error("metric `{0}` has a zero upper quantile; cannot bound its coefficient")]
    ZeroQuantile(String),
    #[error("metric index {index} out of range for {q} metrics")]
    MetricOutOfRange { index: usize, q: usize },
    #[error("coefficient vector has length {got}, expected {expected}")]
    AlphaLength { got: usize, expected: usize },
    #[error("coefficient component {index} is negative or non-finite ({value})")]
    NegativeAlpha { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("length mismatch: {what} has length {got}, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no samples available: {0}")]
    EmptySamples(&'static str),
    #[error("values are constant (zero variance)")]
    ZeroVariance,
    #[error("graph has no borders")]
    NoBorders,
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("could not find a finite starting point after {0} attempts")]
    NonFiniteInit(usize),
    #[error("range calibration failed: {0}")]
    Calibration(String),
    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::NonFiniteInit(_)
            | Error::Calibration(_) => ErrorClass::Numeric,
            Error::Replicate { source, .. } => source.class(),
            _ => ErrorClass::Validation,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
