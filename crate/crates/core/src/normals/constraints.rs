use std::collections::BTreeMap;

use crate::annotation::AnnotationDocument;
use crate::diagnostics::Warning;
use crate::partition::{BoundaryLabel, PixelGrid, SurfacePartition};

use super::{ConstraintSource, Normal, NormalConstraint};

/// Image-plane normals at the closer-side neighbors of smooth-occlusion
/// pixels, pointing from the closer toward the farther side (`z = 0`).
pub fn smooth_occlusion_constraints(
    grid: &PixelGrid,
    partition: &SurfacePartition,
) -> (Vec<NormalConstraint>, Vec<Warning>) {
    let mut sums: BTreeMap<usize, Normal> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (p, label) in grid.boundary_label.as_slice().iter().enumerate() {
        if *label != BoundaryLabel::OcclusionSmooth {
            continue;
        }
        let closer = grid.side_field[p];
        if closer == [0.0, 0.0] {
            let (x, y) = grid.boundary_label.coords(p);
            let curve = grid.boundary_id[p].unwrap_or_default();
            warnings.push(Warning::new(
                "zero_length_tangent",
                format!("boundaries[{curve}] has no tangent at pixel ({x}, {y}); skipped"),
            ));
            continue;
        }
        let n = Normal::new(-closer[0], -closer[1], 0.0);
        for q in partition.gamma_o(p) {
            *sums.entry(q).or_insert_with(Normal::zeros) += n;
        }
    }
    let constraints = sums
        .into_iter()
        .filter_map(|(pixel, sum)| {
            let norm = sum.norm();
            (norm > 1e-12).then(|| NormalConstraint {
                pixel,
                normal: sum / norm,
                source: ConstraintSource::SmoothOcclusion,
            })
        })
        .collect();
    (constraints, warnings)
}

/// Worker normal samples, snapped to the working grid and renormalized.
pub fn annotated_constraints(
    doc: &AnnotationDocument,
    partition: &SurfacePartition,
) -> (Vec<NormalConstraint>, Vec<Warning>) {
    let mut out = Vec::with_capacity(doc.normals.len());
    let mut warnings = Vec::new();
    for (i, s) in doc.normals.iter().enumerate() {
        let n = s.normal();
        let norm = n.norm();
        let pixel = partition.pixel_index(s.position()).filter(|&p| partition.in_region(p));
        match pixel {
            Some(pixel) if norm > 0.0 && norm.is_finite() => out.push(NormalConstraint {
                pixel,
                normal: n / norm,
                source: ConstraintSource::Annotated,
            }),
            _ => warnings.push(Warning::new(
                "normal_sample_skipped",
                format!("normals[{i}] is outside the region or degenerate"),
            )),
        }
    }
    (out, warnings)
}
