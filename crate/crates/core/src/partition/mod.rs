//! Pixel-level decomposition of an annotated region.
//!
//! [`rasterize`] scan-converts the region polygon and boundary polylines onto
//! the working grid; [`partition`] labels continuous surfaces (cut by
//! occlusions) and smooth surfaces (additionally cut by folds) and derives the
//! constrained 4-neighbor graph used by the normal solver.

mod components;
mod rasterize;

pub use components::{partition, SurfaceIds, SurfacePartition};
pub use rasterize::{
    rasterize, working_scale, BoundaryLabel, PixelGrid, RasterCurve, SideConflict,
};
