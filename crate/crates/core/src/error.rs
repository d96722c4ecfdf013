use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A required precondition does not hold for the given state.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// An operation contract was broken, e.g. an event applied off-guard.
    #[error("contract violated: {0}")]
    Contract(String),
    /// The requested feature/name is not supported.
    #[error("unsupported: {0}")]
    Feature(String),
    /// The model itself is inconsistent (dangling refinement, missing POV).
    #[error("model error: {0}")]
    Model(String),
    /// Bad configuration value.
    #[error("config error: field `{field}`: {msg}")]
    Config { field: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
