use thiserror::Error;

pub type Result<T, E = TfdError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TfdError {
    #[error("time {t} outside protocol window [{t_i}, {t_f}]")]
    Domain { t: f64, t_i: f64, t_f: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("truncation tail weight {tail_weight:.3e} exceeds {limit:.1e}; {advice}")]
    Truncation {
        tail_weight: f64,
        limit: f64,
        advice: String,
    },

    #[error("basis mismatch: expected {expected}, found {found}")]
    BasisMismatch { expected: String, found: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),
}

impl TfdError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        TfdError::Parameter(msg.into())
    }
}
