//! Configuration, campaigns and reporting for the `frac-halfspace` driver.

use std::path::PathBuf;

pub mod campaigns;
pub mod config;
pub mod report;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing campaign artifact: {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error(transparent)]
    Core(#[from] halfspace_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::MissingArtifact(_) => 2,
            _ => 1,
        }
    }
}
