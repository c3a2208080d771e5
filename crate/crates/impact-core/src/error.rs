use chrono::NaiveDate;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("records not sorted by timestamp at index {0}")]
    Unsorted(usize),

    #[error("{date}: shortened trading hours, day rejected")]
    ShortenedDay { date: NaiveDate },

    #[error("{date}: zero daily volume")]
    ZeroDailyVolume { date: NaiveDate },

    #[error("not enough windows: need at least {required}, have {available}")]
    TooFewWindows { required: usize, available: usize },

    #[error("need curves for at least {required} window sizes, have {available}")]
    TooFewCurves { required: usize, available: usize },

    #[error("power-law fit needs at least {required} strictly positive points")]
    TooFewPoints { required: usize },

    #[error("non-positive value {value} at point {index} in power-law fit input")]
    NonPositiveScale { index: usize, value: f64 },

    #[error("fit did not converge after {iterations} iterations: {reason}")]
    NonConvergence { iterations: usize, reason: String },

    #[error("series is degenerate: {0}")]
    DegenerateSeries(String),

    #[error("eta undefined: no alternating price movements")]
    UndefinedEta,

    #[error("circulant embedding has negative eigenvalue {0}")]
    EmbeddingFailed(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
