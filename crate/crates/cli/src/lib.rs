//! Experiment drivers, configuration and CSV output behind the `arrayloc` binary.

pub mod config;
pub mod experiments;
pub mod suite;
pub mod table;
pub mod units;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] arrayloc::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
