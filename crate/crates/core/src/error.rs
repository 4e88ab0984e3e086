use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("{0}")]
    Domain(String),
    /// Mesh, grid or option values that cannot be used.
    #[error("configuration error: {0}")]
    Config(String),
    /// `solve_cap` called with a vanishing weight; the closed-form limit applies.
    #[error("weight {which} = 0: use the limit formula of yamabe_halfspace")]
    EdgeWeight { which: char },
    /// A hypothesis of an identity check is not met by the inputs.
    #[error("precondition violated: {what} (residual {residual:.3e})")]
    Precondition { what: String, residual: f64 },
    /// Internal consistency check failed (two formulas for one quantity disagree).
    #[error("numerical inconsistency: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
