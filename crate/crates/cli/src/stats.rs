//! `anno3d stats`: histograms over a document set.

use std::path::PathBuf;

use anno3d_core::annotation::parse;
use anno3d_core::stats::{dataset_stats, DatasetStats};

use crate::{CliError, Result};

pub fn run(paths: &[PathBuf], working_resolution: u32) -> Result<DatasetStats> {
    if paths.is_empty() {
        return Err(CliError::NoDocuments);
    }
    let mut docs = Vec::with_capacity(paths.len());
    for p in paths {
        let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
        docs.push(parse(&bytes).map_err(anno3d_core::Error::from)?);
    }
    Ok(dataset_stats(&docs, working_resolution))
}
