use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("signal file line {line}: {msg}")]
    SignalFormat { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
