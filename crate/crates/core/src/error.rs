use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("empty file")]
    EmptyFile,
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: `{value}` is not a finite number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: treatment not binary (got {value})")]
    TreatmentNotBinary { row: usize, value: f64 },
    #[error("row {row}: outcome not binary (got {value})")]
    OutcomeNotBinary { row: usize, value: f64 },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no estimable subgroup: every candidate lacks support in one treatment arm")]
    NoEstimableSubgroup,
    #[error("dataset has no potential-outcome columns")]
    MissingPotentialOutcomes,
    #[error("no rows match the subgroup rule")]
    EmptySubgroup,
    #[error("subgroup has zero probability")]
    ZeroProbabilitySubgroup,
    #[error("positivity violated at point {point}: P(T=1|x) = {p_t1}")]
    PositivityViolation { point: usize, p_t1: f64 },
    #[error("model has a hidden confounder; the observational contrast does not identify the effect")]
    HiddenConfounder,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("empty sample")]
    EmptySample,
}
