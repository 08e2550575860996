use thiserror::Error;

/// Errors across the toolkit, split by how callers recover from them.
///
/// `Domain` and `Range` are contract violations (bad arguments, window too
/// small); `Numeric`, `Truncation` and `Construction` report that a
/// computation could not reach its accuracy or size target.
#[derive(Debug, Error)]
pub enum QpError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {context} (required window [{required_lo}, {required_hi}])")]
    Range {
        context: String,
        required_lo: i64,
        required_hi: i64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("truncation did not converge: {context} (reached length {reached}, residual {residual:.3e})")]
    Truncation {
        context: String,
        reached: usize,
        residual: f64,
    },

    #[error("construction stopped: {context} (max feasible depth {max_feasible_depth})")]
    Construction {
        context: String,
        max_feasible_depth: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, QpError>;

impl QpError {
    pub fn domain(msg: impl Into<String>) -> Self {
        QpError::Domain(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        QpError::Numeric(msg.into())
    }

    /// Exit code the CLI maps this error to: 2 for contract violations,
    /// 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            QpError::Domain(_) | QpError::Range { .. } | QpError::InsufficientData(_) => 2,
            QpError::Numeric(_) | QpError::Truncation { .. } | QpError::Construction { .. } => 3,
            QpError::Io(_) | QpError::Parse(_) => 2,
        }
    }
}
