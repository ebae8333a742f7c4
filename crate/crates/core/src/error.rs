use thiserror::Error;

/// Errors raised by the modelling library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvacError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration or instance failed validation.
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    /// A numerical grid is too coarse for the requested accuracy.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    /// A search ran out of its evaluation budget.
    #[error("budget exhausted: {0}")]
    Budget(String),
    /// The requested instance is too large to handle exhaustively.
    #[error("instance too large: {0}")]
    TooLarge(String),
    /// The raster has cells that cannot reach the exit.
    #[error("disconnected raster: {0}")]
    Disconnected(String),
}

impl EvacError {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            EvacError::Domain(_) => "domain",
            EvacError::InvalidConfig(_) => "invalid_config",
            EvacError::GridTooCoarse(_) => "grid_too_coarse",
            EvacError::Budget(_) => "budget",
            EvacError::TooLarge(_) => "too_large",
            EvacError::Disconnected(_) => "disconnected",
        }
    }
}

pub type Result<T> = std::result::Result<T, EvacError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(EvacError::Domain(msg.into()))
}
