//! File formats: float rasters, PLY, binary glTF, PNG previews and debug dumps.

mod debug;
mod gltf;
mod ply;
mod png;
mod raster;

use std::path::Path;

pub use debug::{adjacency_summary, write_id_map_png, AdjacencySummary};
pub use gltf::encode_glb;
pub use ply::encode_ply;
pub use png::{write_depth_png16, write_normal_png, DepthPngSidecar};
pub use raster::{
    boundary_from_raster, boundary_to_raster, decode_raster, depth_from_raster, depth_to_raster, encode_raster, normals_from_raster, normals_to_raster, Raster,
    RasterKind, RASTER_VERSION,
};

use crate::{Error, Result};

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
