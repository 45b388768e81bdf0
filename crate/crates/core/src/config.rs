use serde::{Deserialize, Serialize};

use crate::sparse::SolverBackend;
use crate::{Error, Result};

pub const DEFAULT_WORKING_RESOLUTION: u32 = 320;

/// How the ordering LP treats infeasible (cyclic) constraint sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpMode {
    /// Hard ordering constraints; falls back to the penalized form when infeasible.
    Strict,
    /// Always solve with penalized per-pair slacks.
    Soft,
}

impl std::str::FromStr for LpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(LpMode::Strict),
            "soft" => Ok(LpMode::Soft),
            other => Err(Error::InvalidArgument(format!("unknown lp mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionConfig {
    /// Longest side of the working raster, in pixels.
    pub working_resolution: u32,
    /// Minimum depth separation across an occlusion (median-normalized units).
    pub epsilon: f64,
    /// Lower bound on every per-surface scale factor.
    pub eta: f64,
    pub lp_mode: LpMode,
    /// Emit one ordering pair every `pair_stride` boundary pixels.
    pub pair_stride: usize,
    /// Search distance (pixels) for the pixels on either side of a boundary.
    pub pair_offset: usize,
    /// Relative residual target for the iterative backend.
    pub integration_tolerance: f64,
    pub seed: u64,
    pub solver: SolverBackend,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            working_resolution: DEFAULT_WORKING_RESOLUTION,
            epsilon: 0.05,
            eta: 0.01,
            lp_mode: LpMode::Strict,
            pair_stride: 5,
            pair_offset: 2,
            integration_tolerance: 1e-10,
            seed: 0,
            solver: SolverBackend::Cholesky,
        }
    }
}

impl ReconstructionConfig {
    pub fn check(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("eta", self.eta)?;
        positive("integration_tolerance", self.integration_tolerance)?;
        if self.working_resolution == 0 || self.pair_stride == 0 || self.pair_offset == 0 {
            return Err(Error::InvalidArgument(
                "working_resolution, pair_stride and pair_offset must be positive".into(),
            ));
        }
        Ok(())
    }
}
