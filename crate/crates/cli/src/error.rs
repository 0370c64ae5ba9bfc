use std::path::PathBuf;

use thiserror::Error;

/// Front-end failures. Every variant maps onto a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("[config] {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("[config] invalid `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("[{module}] {source}")]
    Module {
        module: &'static str,
        #[source]
        source: cvlattice::Error,
    },

    #[error("[io] {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("[report] run failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// 1 for configuration problems, 2 for everything raised while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config { .. } => 1,
            CliError::Module { source, .. } if source.is_config() => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Tags a core error with the pipeline stage that raised it.
pub trait Tag<T> {
    fn tag(self, module: &'static str) -> CliResult<T>;
}

impl<T> Tag<T> for cvlattice::Result<T> {
    fn tag(self, module: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Module { module, source })
    }
}
