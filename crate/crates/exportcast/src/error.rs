use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
///
/// Every variant carries enough context (country, year, row/column, path)
/// to point at the offending input without a debugger.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid country code {0:?}: expected exactly 3 characters A-Z")]
    InvalidCountryCode(String),

    #[error("country {0} not found in input")]
    CountryNotFound(String),

    #[error("country {country}: missing value for year {year}")]
    MissingYear { country: String, year: i32 },

    #[error("unparseable numeric cell at row {row}, column {col}: {value:?}")]
    BadNumericCell {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("CSV input not recognized: {0}")]
    BadCsvFormat(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("country {country}: expected {expected} values, got {got}")]
    WrongSeriesLength {
        country: String,
        expected: usize,
        got: usize,
    },

    #[error("country {country}: non-positive export value {value} at index {index}")]
    NonPositiveValue {
        country: String,
        value: f64,
        index: usize,
    },

    #[error("country {country}: non-finite value at index {index}")]
    NonFiniteValue { country: String, index: usize },

    #[error("empty series")]
    EmptySeries,

    #[error("cubic disaggregation produced a non-positive value at index {0}")]
    CubicNonPositive(usize),

    #[error("degenerate range: all values equal, min-max normalization undefined")]
    DegenerateRange,

    #[error("need >= 2 values to fit normalization, got {0}")]
    TooFewValues(usize),

    #[error("window must be >= 1")]
    ZeroWindow,

    #[error("series length {len} too short for window {window}")]
    SeriesTooShort { len: usize, window: usize },

    #[error("train fraction {frac} splits {count} samples into an empty train or test set")]
    BadSplit { frac: f64, count: usize },

    #[error("invalid network config: {0}")]
    BadNetworkConfig(String),

    #[error("input length {got} does not match network input size {expected}")]
    InputSizeMismatch { expected: usize, got: usize },

    #[error("training diverged: non-finite loss at epoch {0}")]
    TrainingDiverged(usize),

    #[error("metric inputs must have equal nonzero lengths (got {p} and {a})")]
    MetricLengthMismatch { p: usize, a: usize },

    #[error("MAPE undefined at zero actual (index {0})")]
    MapeZeroActual(usize),

    #[error("regression requires >= 2 points with non-constant X")]
    DegenerateRegression,

    #[error("fold count {k} out of range for {n} samples")]
    BadFoldCount { k: usize, n: usize },

    #[error("forecast diverged at step {0}")]
    ForecastDiverged(usize),

    #[error("forecast produced a non-positive export level at step {0}")]
    ForecastNonPositive(usize),

    #[error("model file {path}: {reason}")]
    BadModelFile { path: PathBuf, reason: String },

    #[error("config error: {0}")]
    BadConfig(String),

    #[error("missing model for country {0}; run `exportcast train` first")]
    MissingModel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
