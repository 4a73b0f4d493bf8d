use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A square root or level argument left the physical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Linearization is undefined at the requested operating point.
    #[error("singular linearization: {0}")]
    SingularLinearization(String),

    /// The operating point needs a negative steady inflow and the flow policy forbids it.
    #[error("infeasible operating point: {0}")]
    Infeasible(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// (Phi^T Phi + R) could not be factored as symmetric positive definite.
    #[error("singular Hessian: {0}")]
    SingularHessian(String),

    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn at_sample(self, index: usize) -> Self {
        Error::AtSample {
            index,
            source: Box::new(self),
        }
    }

    /// Strips any sample-index wrapping.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSample { source, .. } => source.root(),
            other => other,
        }
    }
}
