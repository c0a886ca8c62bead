use thiserror::Error;

pub type Result<T, E = AcrError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AcrError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("operands are built on different cluster trees")]
    TreeMismatch,

    /// A dense leaf of a hierarchical matrix could not be factorized.
    #[error("singular dense leaf at cluster [{lo}, {hi})")]
    SingularLeaf { lo: usize, hi: usize },

    #[error("singular dense matrix of dimension {dim}")]
    SingularMatrix { dim: usize },

    /// An even (eliminated) pivot block failed to invert during reduction.
    #[error("singular pivot block {block} at reduction level {level}: {source}")]
    SingularPivot {
        level: usize,
        block: usize,
        #[source]
        source: Box<AcrError>,
    },

    #[error("non-positive coefficient kappa = {value} sampled at ({x}, {y})")]
    NonPositiveKappa { x: f64, y: f64, value: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

impl AcrError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        AcrError::InvalidArgument(msg.into())
    }

    /// True when the error reports a numerically singular operand.
    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            AcrError::SingularLeaf { .. }
                | AcrError::SingularMatrix { .. }
                | AcrError::SingularPivot { .. }
        )
    }
}
