use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] hydrostat_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error("snapshot format error at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
