//! Front end for `isac-core`: JSON configuration, subcommand dispatch and
//! schema-stable CSV/JSON emission.

pub mod commands;
pub mod config;
pub mod table;

use std::path::PathBuf;

pub use commands::{run, Command, Outcome};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("{module}: {source}")]
    Numeric {
        module: &'static str,
        #[source]
        source: isac_core::Error,
    },
    #[error("cannot write {path}: {msg}")]
    Output { path: PathBuf, msg: String },
}

impl CliError {
    /// Process exit status: 2 for configuration, 3 for numerics, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Numeric { .. } => 3,
            Self::Output { .. } => 1,
        }
    }
}

pub(crate) trait InModule<T> {
    fn in_module(self, module: &'static str) -> Result<T, CliError>;
}

impl<T> InModule<T> for isac_core::Result<T> {
    fn in_module(self, module: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numeric { module, source })
    }
}
