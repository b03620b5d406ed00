use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, EdsvcError>;

#[derive(Debug, Error)]
pub enum EdsvcError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    ParseCell { row: usize, column: usize, value: String },

    #[error("label column {column} out of range for {n_columns} columns")]
    LabelColumnOutOfRange { column: isize, n_columns: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("infeasible dual: N*C = {n_times_c} < 1 (N = {n_points}, C = {c_param})")]
    Infeasible {
        n_points: usize,
        c_param: f64,
        n_times_c: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solver did not converge after {iterations} updates (KKT gap {gap:e})")]
    NotConverged {
        iterations: usize,
        gap: f64,
        /// Best iterate reached before giving up.
        best_beta: Vec<f64>,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("dataset too small: N = {0}, need N >= 8 so that floor(cbrt(N)) >= 2")]
    TooFewPoints(usize),

    #[error("k = {k} out of range for N = {n_points}")]
    InvalidClusterCount { k: usize, n_points: usize },

    #[error("all {0} candidates failed during the {1} scan")]
    AllCandidatesFailed(usize, &'static str),

    #[error("bad distance cache file {path}: {reason}")]
    BadCache { path: PathBuf, reason: String },
}

impl EdsvcError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EdsvcError::Io {
            path: path.into(),
            source,
        }
    }
}
