use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The scatter submatrix over a node's family is not positive definite.
    #[error("singular scatter matrix for node {node} with blanket {blanket:?}")]
    SingularScatter { node: usize, blanket: Vec<usize> },

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("degenerate residuals: {0}")]
    DegenerateResiduals(String),

    #[error("simulation failed: {0}")]
    SimulationFailure(String),
}

impl Error {
    /// True for failures caused by numerically degenerate data rather than bad
    /// arguments.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularScatter { .. } | Error::SingularDesign(_) | Error::DegenerateResiduals(_)
        )
    }
}
