use thiserror::Error;

/// Error taxonomy shared by all modules.
///
/// `Domain` covers invalid mathematical inputs, `Resource` the dense-size
/// caps, `Precondition` violated runtime requirements on otherwise valid
/// inputs, and `Structural` internal consistency failures that indicate a
/// bug rather than a bad input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("structural error: {0}")]
    Structural(String),
}

pub type Result<T> = std::result::Result<T, Error>;
