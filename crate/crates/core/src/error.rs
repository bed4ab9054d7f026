use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration (unknown keys, dangling ids,
    /// out-of-range thresholds).
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("reading from unregistered sensor `{0}`")]
    UnregisteredSensor(String),

    #[error("clock regression: {now} ms is earlier than stored {stored} ms")]
    ClockRegression { now: u64, stored: u64 },

    #[error("tick at {now} ms is off the {period} ms clock grid")]
    OffGrid { now: u64, period: u64 },

    #[error("no actuator registered for channel `{0}`")]
    MissingActuator(String),

    #[error("round {round} outside schedule range 1..={len}")]
    RoundOutOfRange { round: usize, len: usize },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
