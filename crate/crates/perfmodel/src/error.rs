use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerfError {
    #[error("invalid architecture: {0}")]
    Arch(String),
    #[error("invalid application profile: {0}")]
    Profile(String),
    #[error("frames per second must be positive, got {0}")]
    Fps(f64),
}

pub type Result<T, E = PerfError> = std::result::Result<T, E>;
