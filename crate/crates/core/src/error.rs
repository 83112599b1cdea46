use thiserror::Error;

pub type Result<T> = std::result::Result<T, QsrError>;

#[derive(Debug, Error)]
pub enum QsrError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("structure violation in {field}: residual {residual:e}")]
    StructureViolation { field: String, residual: f64 },

    #[error("system is not realizable with canonical commutation matrix: Hamiltonian hermiticity residual {residual:e}")]
    NotRealizable { residual: f64 },

    #[error("singular matrix in {context}: reciprocal condition {rcond:e}")]
    SingularMatrix { context: String, rcond: f64 },

    #[error("SingularFastDynamics: fast block is singular, reciprocal condition {rcond:e}")]
    SingularFastDynamics { rcond: f64 },

    #[error("internal inconsistency in {context}: residual {residual:e}")]
    InternalInconsistency { context: String, residual: f64 },

    #[error("malformed input at line {line}, column {column}: {message}")]
    MalformedInput {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl QsrError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        QsrError::InvalidParameter(msg.into())
    }

    pub fn dims(
        context: impl Into<String>,
        expected: impl std::fmt::Display,
        actual: impl std::fmt::Display,
    ) -> Self {
        QsrError::DimensionMismatch {
            context: context.into(),
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub fn structure(field: impl Into<String>, residual: f64) -> Self {
        QsrError::StructureViolation {
            field: field.into(),
            residual,
        }
    }

    /// True for failures caused by the numbers themselves (singular blocks,
    /// resolvent poles) rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            QsrError::SingularMatrix { .. }
                | QsrError::SingularFastDynamics { .. }
                | QsrError::InternalInconsistency { .. }
        )
    }
}
