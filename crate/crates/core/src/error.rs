use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The target set `E = {1}` has no block system.
    #[error("target set E = {{1}} is trivial and has no block system")]
    TrivialTarget,
    #[error("{what} exceeds cap {cap}")]
    CapExceeded { what: &'static str, cap: u128 },
    #[error("no separating periodic point with period <= {0}")]
    NotFound(usize),
    /// Point dynamics ran past the built depth of the system.
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("construction invariant broken: {0}")]
    Construction(String),
    #[error("incomplete window: {0}")]
    IncompleteWindow(String),
}
