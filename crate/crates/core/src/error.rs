use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model spec parse error: {0}")]
    Parse(String),
    #[error("invalid model: {}", format_violations(.0))]
    InvalidModel(Vec<Violation>),
    #[error("diagonal jump at state {0}")]
    DiagonalJump(usize),
    #[error("asymmetric duplicate jump entry ({x}, {y}): {forward} vs {backward}")]
    AsymmetricDuplicate {
        x: usize,
        y: usize,
        forward: f64,
        backward: f64,
    },
    #[error("state index {index} out of range for n = {n}")]
    StateOutOfRange { index: usize, n: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal ratio {off_ratio:e})")]
    NoConvergence { sweeps: usize, off_ratio: f64 },
    #[error("quadrature panel budget of {0} panels exhausted")]
    PanelBudget(usize),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
