use std::io;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{command}: {source}")]
    Command {
        command: &'static str,
        #[source]
        source: shadownet_core::Error,
    },

    #[error(transparent)]
    Core(#[from] shadownet_core::Error),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn in_command(command: &'static str) -> impl FnOnce(shadownet_core::Error) -> CliError {
        move |source| CliError::Command { command, source }
    }
}
