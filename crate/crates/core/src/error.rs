use thiserror::Error;

/// Errors produced anywhere in the validation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("line {line}: {message}")]
    Row { line: usize, message: String },

    #[error("no records")]
    NoRecords,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("item `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("determinant nonpositive")]
    DeterminantNonpositive,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("model over-parameterized (df = {0})")]
    OverParameterized(i64),

    #[error("degenerate target")]
    DegenerateTarget,

    #[error("reduction exhausted: {0}")]
    ReductionExhausted(String),

    #[error("invalid scaling factor {0}")]
    InvalidScalingFactor(f64),

    #[error("invalid scaling factor {c_d} for the difference test; unscaled difference is {t_diff:.3} on {df} df (p = {p:.4})")]
    ScaledDifferenceInvalid {
        c_d: f64,
        t_diff: f64,
        df: i64,
        p: f64,
    },

    #[error("baseline statistic does not exceed its degrees of freedom; CFI/TLI undefined")]
    BaselineUndefined,

    #[error("nonpositive variance estimate for `{0}`")]
    NonpositiveVariance(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
