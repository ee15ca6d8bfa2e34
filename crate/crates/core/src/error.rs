use thiserror::Error;

/// Error type shared by every subsystem of the crate.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("model violates a structural condition: {0}")]
    Model(String),
    #[error("operation is not supported for this model: {0}")]
    UnsupportedModel(String),
    #[error("problem size exceeds the exact-solver budget: {0}")]
    Resource(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration rejected: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization failure: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;

impl SimError {
    /// Process exit code contract: 0 pass, 1 criterion fail, 2 invalid
    /// config/input, 3 resource overrun.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Resource(_) => 3,
            SimError::Input(_)
            | SimError::Model(_)
            | SimError::UnsupportedModel(_)
            | SimError::Config(_)
            | SimError::MissingArtifact(_) => 2,
            _ => 2,
        }
    }
}
