use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("response column `{0}` not found in header")]
    MissingResponse(String),

    #[error("column `{0}` appears more than once in header")]
    DuplicateColumn(String),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: {reason} (value `{value}`)")]
    BadCell {
        row: usize,
        column: String,
        value: String,
        reason: &'static str,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("unsupported level count q={q}: not a supported prime power{}", nearest(*below, *above))]
    UnsupportedField {
        q: u32,
        below: Option<u32>,
        above: Option<u32>,
    },

    #[error("an OA with {q} levels has at most {max} columns, requested {p}")]
    TooManyColumns { p: usize, q: u32, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coordinate {value} at position {index} lies outside [0, 1]")]
    OutOfUnitInterval { index: usize, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("n={n} is not a multiple of q^2={q2}; use the weak-strength bound")]
    NotMultipleOfQSquared { n: usize, q2: usize },

    #[error("requested subsample of {n} rows from {available} available")]
    SubsampleTooLarge { n: usize, available: usize },

    #[error("no audit trail recorded for this subsample (method `{0}`)")]
    AuditUnavailable(String),

    #[error(
        "singular local design for predictor {column} at x={x:.6} (point {point}) with bandwidth {bandwidth}; increase the bandwidth"
    )]
    SingularSmoother {
        column: usize,
        point: usize,
        x: f64,
        bandwidth: f64,
    },

    #[error("linear system for the two-component fit is singular; increase the bandwidths")]
    SingularSystem,

    #[error("every bandwidth candidate failed to fit; use a coarser grid with larger bandwidths")]
    NoValidCandidate,

    #[error("test grid value {value} for predictor {column} falls outside the scaled domain")]
    GridOutsideDomain { column: usize, value: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn nearest(below: Option<u32>, above: Option<u32>) -> String {
    match (below, above) {
        (Some(b), Some(a)) => format!(" (nearest supported: {b} or {a})"),
        (Some(b), None) => format!(" (largest supported: {b})"),
        (None, Some(a)) => format!(" (smallest supported: {a})"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
