use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration is incomplete or inconsistent.
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    ConfigSyntax { path: PathBuf, source: toml::de::Error },

    #[error(transparent)]
    Core(#[from] kinbm::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlOut(#[from] toml::ser::Error),
}

impl CliError {
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::ConfigSyntax { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Core(e) => e.class(),
            CliError::Json(_) => "json",
            CliError::TomlOut(_) => "config",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "config" => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
