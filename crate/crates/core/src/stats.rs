//! Dataset-level histograms over annotation documents.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::annotation::AnnotationDocument;
use crate::partition::{partition, rasterize, working_scale};

/// Focal-length bins in units of image width: `[0, 1)`, `[1, 10)`, `[10, inf)`.
pub const FOCAL_BIN_EDGES: [f64; 2] = [1.0, 10.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocalBin {
    pub lo: f64,
    /// `None` for the open-ended last bin.
    pub hi: Option<f64>,
    pub count: usize,
}

/// Regions by which boundary kinds they contain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BoundaryKindCounts {
    pub occlusion_only: usize,
    pub fold_only: usize,
    pub both: usize,
    pub neither: usize,
}

/// Regions by which planarity flags they contain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PlanarityCounts {
    pub planar_only: usize,
    pub curved_only: usize,
    pub both: usize,
    pub neither: usize,
}

/// Index into `[first only, second only, both, neither]`.
fn bucket(first: bool, second: bool) -> usize {
    match (first, second) {
        (true, false) => 0,
        (false, true) => 1,
        (true, true) => 2,
        (false, false) => 3,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub documents: usize,
    pub focal_histogram: Vec<FocalBin>,
    /// Occlusions count sharp and smooth alike.
    pub boundary_kinds: BoundaryKindCounts,
    pub planarity: PlanarityCounts,
    /// Number of continuous surfaces per region -> number of regions.
    pub continuous_surface_counts: BTreeMap<usize, usize>,
    pub smooth_surface_counts: BTreeMap<usize, usize>,
    /// Documents whose region could not be rasterized.
    pub unpartitioned: Vec<String>,
}

pub fn dataset_stats(docs: &[AnnotationDocument], working_resolution: u32) -> DatasetStats {
    let mut focal = vec![0usize; FOCAL_BIN_EDGES.len() + 1];
    let mut boundary_kinds = [0usize; 4];
    let mut planarity = [0usize; 4];
    let mut continuous = BTreeMap::new();
    let mut smooth = BTreeMap::new();
    let mut unpartitioned = Vec::new();
    for doc in docs {
        let ratio = doc.intrinsics.focal_px / f64::from(doc.intrinsics.width);
        focal[FOCAL_BIN_EDGES.iter().take_while(|&&e| ratio >= e).count()] += 1;
        boundary_kinds[bucket(
            doc.boundaries.iter().any(|b| b.kind.is_occlusion()),
            doc.boundaries.iter().any(|b| !b.kind.is_occlusion()),
        )] += 1;
        planarity[bucket(
            doc.planarity.iter().any(|p| p.is_planar),
            doc.planarity.iter().any(|p| !p.is_planar),
        )] += 1;
        match rasterize(doc, working_scale(&doc.intrinsics, working_resolution)) {
            Ok(grid) => {
                let part = partition(&grid);
                *continuous.entry(part.num_continuous).or_insert(0) += 1;
                *smooth.entry(part.num_smooth).or_insert(0) += 1;
            }
            Err(_) => unpartitioned.push(doc.image_id.clone()),
        }
    }
    let mut lo = 0.0;
    let focal_histogram = focal
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            let hi = FOCAL_BIN_EDGES.get(i).copied();
            let bin = FocalBin { lo, hi, count };
            lo = hi.unwrap_or(f64::INFINITY);
            bin
        })
        .collect();
    DatasetStats {
        documents: docs.len(),
        focal_histogram,
        boundary_kinds: BoundaryKindCounts {
            occlusion_only: boundary_kinds[0],
            fold_only: boundary_kinds[1],
            both: boundary_kinds[2],
            neither: boundary_kinds[3],
        },
        planarity: PlanarityCounts {
            planar_only: planarity[0],
            curved_only: planarity[1],
            both: planarity[2],
            neither: planarity[3],
        },
        continuous_surface_counts: continuous,
        smooth_surface_counts: smooth,
        unpartitioned,
    }
}
