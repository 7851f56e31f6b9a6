use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}:{line}: {message}")]
    Syntax {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("key `{0}` given in more than one unit form")]
    DuplicateKey(String),

    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] gem_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Process exit status for each failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const IO: i32 = 4;
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(key: &str, message: impl Into<String>) -> Self {
        Self::InvalidValue {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use gem_core::Error as E;
        match self {
            Self::Io { .. } => exit::IO,
            Self::Core(E::Io(_) | E::Image(_)) => exit::IO,
            Self::Core(
                E::KernelUnderResolved { .. }
                | E::KernelOverExtended { .. }
                | E::Unstable { .. }
                | E::FitNotConverged { .. }
                | E::DegenerateFit(_)
                | E::TooFewPeaks { .. }
                | E::ZeroPower
                | E::MissingTransverse,
            ) => exit::NUMERICAL,
            _ => exit::CONFIG,
        }
    }
}
