//! Command implementations and the HTTP preview service behind the `anno3d` binary.

pub mod evaluate;
pub mod reconstruct;
pub mod service;
pub mod settings;
pub mod stats;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] anno3d_core::Error),

    #[error("invalid config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("missing inputs: {}", describe_missing(.0))]
    MissingInputs(Vec<MissingInput>),

    #[error("evaluation failed for {}", describe_failures(.0))]
    ItemsFailed(Vec<(String, String)>),

    #[error("{failed} of {total} documents failed")]
    BatchFailed { failed: usize, total: usize },

    #[error("no documents given")]
    NoDocuments,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct MissingInput {
    pub id: String,
    pub field: String,
    pub path: PathBuf,
}

fn describe_missing(items: &[MissingInput]) -> String {
    let parts: Vec<String> = items
        .iter()
        .map(|m| format!("{} ({}: {})", m.id, m.field, m.path.display()))
        .collect();
    parts.join(", ")
}

fn describe_failures(items: &[(String, String)]) -> String {
    let parts: Vec<String> = items.iter().map(|(id, msg)| format!("{id} ({msg})")).collect();
    parts.join(", ")
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
