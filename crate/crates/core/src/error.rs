use thiserror::Error;

use crate::solver::SolutionField;

/// Errors produced anywhere in the solve / diagnose pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfiguration { field: String, reason: String },

    #[error("invalid coefficient at node {node}: {reason}")]
    InvalidCoefficient { node: usize, reason: String },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("unsupported radius {radius} (admissible range [{min}, {max}])")]
    UnsupportedRadius { radius: f64, min: f64, max: f64 },

    #[error("point {point:?} lies outside the grid")]
    OutOfDomain { point: Vec<f64> },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConverged {
        iterations: usize,
        residual: f64,
        last: Box<SolutionField>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate height: M(r) = {value:.3e} at r = {radius}")]
    DegenerateHeight { radius: f64, value: f64 },

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    #[error("unsupported reference kind: {0}")]
    UnsupportedKind(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfiguration {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
