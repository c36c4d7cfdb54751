use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Core(#[from] wristgest_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("pipeline task failed: {0}")]
    Join(String),
}

pub type Result<T> = std::result::Result<T, ServiceError>;
