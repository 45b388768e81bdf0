//! Dense normal propagation from sparse constraints.
//!
//! Known normals come from annotations, from smooth occlusions (in the image
//! plane, orthogonal to the curve, pointing to the farther side) and from
//! relation adjustment. The dense field minimizes the smoothness energy over
//! the constrained neighbor graph of the partition.

mod constraints;
mod relations;
mod solve;

use std::collections::BTreeMap;

use nalgebra::Vector3;

use crate::grid::Grid;

pub use constraints::{annotated_constraints, smooth_occlusion_constraints};
pub use relations::{adjust_relative_normals, RelationAdjustment};
pub use solve::{smoothness_energy, solve_dense_normals, DenseNormals};

pub type Normal = Vector3<f64>;

/// Where a constraint came from; later variants take precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintSource {
    SmoothOcclusion,
    Annotated,
    RelationAdjusted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalConstraint {
    /// Working-grid pixel index.
    pub pixel: usize,
    pub normal: Normal,
    pub source: ConstraintSource,
}

/// At most one constraint per pixel, resolved by source precedence.
#[derive(Debug, Clone, Default)]
pub struct NormalConstraintSet {
    entries: BTreeMap<usize, NormalConstraint>,
}

impl NormalConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts unless a higher-precedence constraint already holds the pixel.
    pub fn insert(&mut self, c: NormalConstraint) {
        match self.entries.get(&c.pixel) {
            Some(existing) if existing.source > c.source => {}
            _ => {
                self.entries.insert(c.pixel, c);
            }
        }
    }

    pub fn extend(&mut self, items: impl IntoIterator<Item = NormalConstraint>) {
        for c in items {
            self.insert(c);
        }
    }

    pub fn get(&self, pixel: usize) -> Option<&NormalConstraint> {
        self.entries.get(&pixel)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NormalConstraint> {
        self.entries.values()
    }
}

/// Per-pixel unit normals over the region; invalid pixels hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    pub normals: Grid<Normal>,
    pub valid: Grid<bool>,
}

impl NormalMap {
    pub fn width(&self) -> usize {
        self.normals.width()
    }

    pub fn height(&self) -> usize {
        self.normals.height()
    }

    pub fn get(&self, idx: usize) -> Option<Normal> {
        self.valid[idx].then(|| self.normals[idx])
    }

    /// Uniform map, mostly for tests and baselines.
    pub fn constant(valid: Grid<bool>, n: Normal) -> Self {
        let normals = valid.map(|&v| if v { n } else { Normal::zeros() });
        Self { normals, valid }
    }
}
