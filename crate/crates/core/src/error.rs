use std::fmt;

use crate::condnum::AtomicOp;

/// Which execution lane an evaluation failure happened in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lane {
    Original,
    Perturbed,
    Oracle,
}

impl fmt::Display for Lane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lane::Original => "original",
            Lane::Perturbed => "perturbed",
            Lane::Oracle => "oracle",
        })
    }
}

/// Line/column position in program text, 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{op} outside its domain in the {lane} lane at op #{op_index}")]
    OpDomain {
        op: AtomicOp,
        lane: Lane,
        op_index: usize,
    },

    #[error("non-finite result of {op} in the {lane} lane at op #{op_index}")]
    NonFinite {
        op: AtomicOp,
        lane: Lane,
        op_index: usize,
    },

    #[error("syntax error at {span}: {message}")]
    Syntax { span: Span, message: String },

    #[error("unknown function `{name}` at {span}")]
    UnknownFunction { name: String, span: Span },

    #[error("`{name}` used at {span} before it is bound")]
    UseBeforeBind { name: String, span: Span },

    #[error("`{name}` rebound at {span}")]
    Rebinding { name: String, span: Span },

    #[error("no value bound for parameter `{0}`")]
    UnboundParameter(String),

    #[error("at {span}: {source}")]
    AtSource {
        span: Span,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix is singular (zero pivot in column {column})")]
    Singular { column: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("oracle arithmetic failed: {0}")]
    Oracle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// The error underneath any source-span wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSource { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_non_finite(&self) -> bool {
        matches!(self.root(), Error::NonFinite { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
