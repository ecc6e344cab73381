//! Error type shared by every module.

use num_complex::Complex64;

/// Failure modes of the toolkit. CLI exit codes are derived from the variant.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point {0} is not on the unit circle")]
    OffCircle(Complex64),

    #[error("point {0} is not inside the open unit disc")]
    OutsideDisc(Complex64),

    #[error("index {index} lies outside the truncation window [-{order}, {order}]")]
    OutsideWindow { index: i64, order: usize },

    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("inner function is not pure: |Theta(0)| = {0}")]
    NotPure(f64),

    #[error("{0} is not J-symmetric")]
    NotJSymmetric(String),

    #[error("operator is not in the class: {0}")]
    Rejected(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("unknown kind `{0}`")]
    UnknownKind(String),

    #[error("truncation window too small: {0}")]
    WindowTooSmall(String),

    #[error("numerical assertion failed: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Prefix the field path of an `Invalid` error, e.g. `frame` becomes `factors[0].frame`.
    pub fn within(self, prefix: &str) -> Self {
        match self {
            Error::Invalid { field, reason } => Error::Invalid {
                field: format!("{prefix}.{field}"),
                reason,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
