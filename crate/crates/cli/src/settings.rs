//! Reconstruction config assembled from a JSON file and command-line overrides.

use std::path::Path;

use anno3d_core::{LpMode, ReconstructionConfig};

use crate::{CliError, Result};

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub resolution: Option<u32>,
    pub lp_mode: Option<LpMode>,
}

pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ReconstructionConfig> {
    let mut config = match path {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_slice(&bytes).map_err(|e| CliError::Config {
                path: p.to_path_buf(),
                message: e.to_string(),
            })?
        }
        None => ReconstructionConfig::default(),
    };
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(r) = overrides.resolution {
        config.working_resolution = r;
    }
    if let Some(mode) = overrides.lp_mode {
        config.lp_mode = mode;
    }
    config.check()?;
    Ok(config)
}

/// Applies a partial JSON object of config keys on top of `base`.
pub fn merge_config(base: &ReconstructionConfig, patch: &serde_json::Value) -> anno3d_core::Result<ReconstructionConfig> {
    let mut value = serde_json::to_value(base).expect("config serializes");
    if let (Some(target), Some(source)) = (value.as_object_mut(), patch.as_object()) {
        for (k, v) in source {
            target.insert(k.clone(), v.clone());
        }
    } else if !patch.is_null() {
        return Err(anno3d_core::Error::InvalidArgument("config overrides must be a JSON object".into()));
    }
    let config: ReconstructionConfig =
        serde_json::from_value(value).map_err(|e| anno3d_core::Error::InvalidArgument(format!("config: {e}")))?;
    config.check()?;
    Ok(config)
}
