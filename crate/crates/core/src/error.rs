use thiserror::Error;

use crate::expr::Span;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error in `{primitive}`{}: {message}", node_suffix(*.node))]
    Domain {
        primitive: String,
        node: Option<usize>,
        message: String,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{0}")]
    Literal(String),

    #[error("{message} at {span}")]
    Syntax { message: String, span: Span },

    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),

    #[error("expression has more than one free variable: {0:?}")]
    MultipleVariables(Vec<String>),

    #[error("objective must be real-valued (step {step}: imaginary part {imag:e})")]
    NonRealObjective { step: usize, imag: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn node_suffix(node: Option<usize>) -> String {
    node.map(|n| format!(" (node {n})")).unwrap_or_default()
}

impl Error {
    pub(crate) fn domain(primitive: &str, message: impl Into<String>) -> Self {
        Error::Domain {
            primitive: primitive.to_string(),
            node: None,
            message: message.into(),
        }
    }

    /// Attaches a graph node index to a domain error.
    pub(crate) fn at_node(self, id: usize) -> Self {
        match self {
            Error::Domain {
                primitive,
                node: None,
                message,
            } => Error::Domain {
                primitive,
                node: Some(id),
                message,
            },
            other => other,
        }
    }

    /// True for errors caused by the input text or arguments rather than by
    /// evaluating a function.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Literal(_)
                | Error::Syntax { .. }
                | Error::UnknownPrimitive(_)
                | Error::MultipleVariables(_)
                | Error::InvalidArgument(_)
                | Error::Shape(_)
        )
    }
}
