use std::path::PathBuf;

use thiserror::Error;

use crate::qutrit::Outcome;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QutritError {
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("outcome {outcome} has probability {probability:e}")]
    ImpossibleOutcome { outcome: Outcome, probability: f64 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RayError {
    #[error("unknown ray id {0}")]
    UnknownId(usize),
    #[error("unknown ray label `{0}`")]
    UnknownLabel(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    /// Named cells had no samples.
    #[error("insufficient data: {}", .missing.join(", "))]
    InsufficientData { missing: Vec<String> },
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
}

impl StatsError {
    pub fn missing(cell: impl Into<String>) -> Self {
        StatsError::InsufficientData {
            missing: vec![cell.into()],
        }
    }
}

/// Step of the Yu-Oh canonicalization that rejected the graph.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonicalizeError {
    #[error("expected 13 vertices, got {0}")]
    VertexCount(usize),
    #[error("step 1: degree sequence {degrees:?} is not four 3s and nine 4s")]
    DegreeSequence { degrees: Vec<usize> },
    #[error("step 2: {0} vertices touch an h-vertex, expected 6")]
    YBlock(usize),
    #[error("step 3: {0}")]
    ZMatching(String),
    #[error("step 4: {0}")]
    HMatching(String),
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("fit did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("histogram is empty")]
    Empty,
    #[error("degenerate mixture: {0}")]
    Degenerate(String),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown ray label in token `{token}`")]
    UnknownRay { line: usize, token: String },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid noise configuration: {0}")]
    Invalid(String),
    #[error("cannot parse noise configuration: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Fit(#[from] FitError),
}
