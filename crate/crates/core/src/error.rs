use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: label `{value}` is not one of -1, 1, +1")]
    InvalidLabel { line: u64, value: String },

    #[error("sample is empty")]
    EmptySample,

    #[error("{objects} objects but {labels} labels")]
    LengthMismatch { objects: usize, labels: usize },

    #[error("distance between training object {train} and query {query}: {message}")]
    Metric {
        train: usize,
        query: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("all coefficients are zero; the hypothesis is undefined")]
    UndefinedHypothesis,

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("exhaustive search refused for m = {m} > {threshold}; use the greedy method")]
    ExhaustiveTooLarge { m: usize, threshold: usize },

    #[error("probe domain is empty")]
    EmptyProbes,
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::Domain { name, value, range }
    }
}
