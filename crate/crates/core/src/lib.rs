//! Reconstruction of dense normals, depth, point clouds and meshes from
//! sparse human 3D annotations of a single image, and the evaluation metrics
//! used to score single-image 3D predictions.
//!
//! Pipeline: [`annotation`] documents are rasterized and split into surfaces
//! by [`partition`]; [`normals`] propagates sparse normals to a dense field;
//! [`depth`] integrates each continuous surface and orders surfaces with a
//! small LP; [`pipeline::reconstruct`] ties the stages together. [`metrics`]
//! holds the evaluation suite and [`io`] the file formats.

pub mod annotation;
pub mod config;
pub mod depth;
pub mod diagnostics;
mod error;
pub mod geom;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod normals;
pub mod partition;
pub mod pipeline;
pub mod sparse;
pub mod stats;
pub mod synthetic;

pub use annotation::AnnotationDocument;
pub use config::{LpMode, ReconstructionConfig};
pub use diagnostics::Warning;
pub use error::{Error, Result};
pub use grid::Grid;
pub use pipeline::{reconstruct, Reconstruction, RunReport};
