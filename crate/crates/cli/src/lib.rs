//! Experiment runner for the satqkd pipeline: configuration, staged
//! commands and report files.

pub mod commands;
pub mod config;
pub mod pipeline;

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    MissingInput(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::MissingInput(_) => 3,
            Self::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::MissingInput(m) => write!(f, "missing input: {m}"),
            Self::Internal(m) => write!(f, "internal failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<satqkd::Error> for CliError {
    fn from(e: satqkd::Error) -> Self {
        match e {
            satqkd::Error::InvalidConfig(m) => Self::Config(m),
            other => Self::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Internal(e.to_string())
    }
}
