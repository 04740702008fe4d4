use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero form where a non-zero form is required")]
    ZeroForm,

    #[error("identical forms passed to a height comparison")]
    IdenticalForms,

    /// A form had a zero coefficient on the current vertical axis. The
    /// caller is expected to redraw the coordinate transform.
    #[error("vertical form encountered at level {level}")]
    Vertical { level: usize },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("constraint system is infeasible")]
    Infeasible,

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("wall pruning kept both candidates of sample form {0}")]
    ObservationViolated(usize),

    #[error("no generic transform found after {0} attempts")]
    GenericityExhausted(usize),

    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    /// True for failures that a fresh coordinate transform can fix.
    pub fn is_genericity(&self) -> bool {
        matches!(self, Error::Vertical { .. } | Error::Degenerate(_))
    }
}
