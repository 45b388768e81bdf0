//! End-to-end reconstruction of one annotation document.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::annotation::{validate_with_resolution, AnnotationDocument};
use crate::config::{LpMode, ReconstructionConfig};
use crate::depth::{
    backproject, build_mesh, integrate_surface, median, sample_ordering_pairs, snap_normals, solve_ordering_lp,
    DepthMap, LpSolution, Mesh, OrderingConstraintSet, OrderingTerm, SurfaceDepth,
};
use crate::diagnostics::Warning;
use crate::grid::Grid;
use crate::normals::{
    adjust_relative_normals, annotated_constraints, smooth_occlusion_constraints, solve_dense_normals,
    NormalConstraintSet, NormalMap,
};
use crate::partition::{partition, rasterize, working_scale, PixelGrid, SurfacePartition};
use crate::{Error, Result};

/// Summary written next to the artifacts of every run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub image_id: String,
    pub working_width: usize,
    pub working_height: usize,
    /// Annotation pixels to working pixels.
    pub scale: f64,
    pub num_continuous: usize,
    pub num_smooth: usize,
    pub num_constraints: usize,
    pub num_pairs: usize,
    pub lp_mode_requested: LpMode,
    pub lp_mode_used: LpMode,
    /// Indices into the sampled pair list whose ordering does not hold.
    pub violated_pairs: Vec<usize>,
    pub scale_factors: Vec<f64>,
    /// Factor that brought the global median depth to 1.
    pub depth_normalization: f64,
    pub warnings: Vec<Warning>,
    /// Wall-clock milliseconds per stage; the only non-deterministic field.
    pub timings_ms: BTreeMap<String, f64>,
}

/// Every intermediate and final product of a reconstruction.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub grid: PixelGrid,
    pub partition: SurfacePartition,
    pub constraints: NormalConstraintSet,
    /// Dense normals as solved, before the z-snap.
    pub normals: NormalMap,
    pub snapped_normals: NormalMap,
    pub surfaces: Vec<SurfaceDepth>,
    pub pairs: OrderingConstraintSet,
    pub terms: Vec<OrderingTerm>,
    pub lp: LpSolution,
    /// `X_S * Z_S` per pixel, before global normalization.
    pub scaled_depth: DepthMap,
    /// Scaled depth divided by its global median.
    pub depth: DepthMap,
    pub points: Grid<Option<[f64; 3]>>,
    pub mesh: Mesh,
    pub report: RunReport,
}

struct Timer(BTreeMap<String, f64>, Instant);

impl Timer {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.0.insert(stage.to_string(), (now - self.1).as_secs_f64() * 1e3);
        self.1 = now;
    }
}

/// Runs validation, partitioning, the normal solve, per-surface integration
/// and the ordering LP on one document.
pub fn reconstruct(doc: &AnnotationDocument, config: &ReconstructionConfig) -> Result<Reconstruction> {
    config.check()?;
    let mut timer = Timer(BTreeMap::new(), Instant::now());
    let validation = validate_with_resolution(doc, config.working_resolution);
    if !validation.is_valid() {
        return Err(Error::Invalid(validation));
    }
    let mut warnings: Vec<Warning> = validation
        .warnings
        .iter()
        .map(|v| Warning::new(v.code.clone(), format!("{}: {}", v.location, v.message)))
        .collect();
    timer.lap("validate");

    let scale = working_scale(&doc.intrinsics, config.working_resolution);
    let grid = rasterize(doc, scale)?;
    let part = partition(&grid);
    timer.lap("partition");

    let mut constraints = NormalConstraintSet::new();
    let (occl, w) = smooth_occlusion_constraints(&grid, &part);
    constraints.extend(occl);
    warnings.extend(w);
    let (annotated, w) = annotated_constraints(doc, &part);
    constraints.extend(annotated);
    warnings.extend(w);
    let adjustment = adjust_relative_normals(doc, &part)?;
    constraints.extend(adjustment.constraints);
    warnings.extend(adjustment.warnings);
    let dense = solve_dense_normals(&part, &constraints, config.solver, config.integration_tolerance)?;
    warnings.extend(dense.warnings);
    timer.lap("normals");

    let snapped = snap_normals(&dense.map);
    let intr = grid.intrinsics;
    let surfaces = (0..part.num_continuous as u32)
        .map(|s| integrate_surface(&snapped, &part, &intr, s, config.solver, config.integration_tolerance))
        .collect::<Result<Vec<_>>>()?;
    let mut base = Grid::new(grid.width(), grid.height(), f64::NAN);
    for surface in &surfaces {
        for (p, z) in surface.depth() {
            base[p] = z;
        }
    }
    timer.lap("integrate");

    let (pairs, w) = sample_ordering_pairs(&grid, &part, config.pair_stride, config.pair_offset);
    warnings.extend(w);
    let terms: Vec<OrderingTerm> = pairs
        .pairs
        .iter()
        .map(|pair| OrderingTerm {
            closer: part.continuous_id[pair.closer].expect("pair pixel in region"),
            closer_depth: base[pair.closer],
            farther: part.continuous_id[pair.farther].expect("pair pixel in region"),
            farther_depth: base[pair.farther],
        })
        .collect();
    let lp = solve_ordering_lp(part.num_continuous, &terms, config.epsilon, config.eta, config.lp_mode)?;
    warnings.extend(lp.warnings.iter().cloned());
    timer.lap("ordering");

    let scaled_depth = Grid::from_fn(grid.width(), grid.height(), |x, y| {
        let p = base.index(x, y);
        match part.continuous_id[p] {
            Some(s) => lp.scales[s as usize] * base[p],
            None => f64::NAN,
        }
    });
    let normalization = median(scaled_depth.as_slice().iter().copied()).map_or(1.0, |m| 1.0 / m);
    let depth = scaled_depth.map(|&z| z * normalization);
    let (points, w) = backproject(&depth, &intr);
    warnings.extend(w);
    let mesh = build_mesh(&points, &part);
    timer.lap("mesh");

    let report = RunReport {
        image_id: doc.image_id.clone(),
        working_width: grid.width(),
        working_height: grid.height(),
        scale,
        num_continuous: part.num_continuous,
        num_smooth: part.num_smooth,
        num_constraints: constraints.len(),
        num_pairs: pairs.pairs.len(),
        lp_mode_requested: config.lp_mode,
        lp_mode_used: lp.mode,
        violated_pairs: lp.violated.clone(),
        scale_factors: lp.scales.clone(),
        depth_normalization: normalization,
        warnings,
        timings_ms: timer.0,
    };
    Ok(Reconstruction {
        grid,
        partition: part,
        constraints,
        normals: dense.map,
        snapped_normals: snapped,
        surfaces,
        pairs,
        terms,
        lp,
        scaled_depth,
        depth,
        points,
        mesh,
        report,
    })
}
