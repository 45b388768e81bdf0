use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnnotationDocument, BoundaryKind, Point2};
use crate::config::DEFAULT_WORKING_RESOLUTION;
use crate::geom::{find_self_intersection, point_in_polygon};
use crate::partition::{partition, rasterize, working_scale, SurfacePartition};
use crate::Error;

/// Tolerance on `|n| = 1` for annotated normals.
const UNIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    /// Path into the document, e.g. `boundaries[2].closer_side`.
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Non-blocking observations (e.g. a looping curve with inconsistent sides).
    #[serde(default)]
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: &str, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            code: code.into(),
            location: location.into(),
            message: message.into(),
        });
    }
}

/// Checks every document invariant, resolving surface-level rules at the
/// default working resolution.
pub fn validate(doc: &AnnotationDocument) -> ValidationReport {
    validate_with_resolution(doc, DEFAULT_WORKING_RESOLUTION)
}

pub fn validate_with_resolution(doc: &AnnotationDocument, working_resolution: u32) -> ValidationReport {
    let mut report = ValidationReport::default();
    structural_checks(doc, &mut report);
    if report.is_valid() {
        surface_checks(doc, working_resolution, &mut report);
    }
    report
}

fn finite(p: Point2) -> bool {
    p[0].is_finite() && p[1].is_finite()
}

fn structural_checks(doc: &AnnotationDocument, report: &mut ValidationReport) {
    let intr = &doc.intrinsics;
    if !(intr.focal_px.is_finite() && intr.focal_px > 0.0) {
        report.push("focal_not_positive", "intrinsics.focal_px", format!("focal length {} must be > 0", intr.focal_px));
    }
    if intr.width == 0 || intr.height == 0 {
        report.push("image_size_invalid", "intrinsics", "width and height must be positive");
    }
    let (w, h) = (intr.width as f64, intr.height as f64);
    let in_bounds = |p: Point2| finite(p) && p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= w && p[1] <= h;

    let poly = &doc.region.vertices;
    if poly.len() < 3 {
        report.push("polygon_too_small", "region", format!("polygon has {} vertices, needs at least 3", poly.len()));
    } else {
        for (i, v) in poly.iter().enumerate() {
            if !in_bounds(*v) {
                report.push("vertex_out_of_bounds", format!("region[{i}]"), format!("vertex {v:?} lies outside the image"));
            }
        }
        if poly.iter().all(|v| finite(*v)) {
            if let Some((a, b)) = find_self_intersection(poly) {
                report.push("polygon_self_intersecting", "region", format!("edges {a} and {b} intersect"));
            }
        }
    }

    for (i, curve) in doc.boundaries.iter().enumerate() {
        let loc = format!("boundaries[{i}]");
        if curve.points.len() < 2 {
            report.push("boundary_too_short", &loc, "a boundary needs at least 2 points");
        }
        if curve.points.iter().any(|p| !finite(*p)) {
            report.push("non_finite_value", format!("{loc}.points"), "non-finite coordinate");
        }
        match (curve.kind, curve.closer_side) {
            (BoundaryKind::Fold, Some(_)) => {
                report.push("fold_has_side", format!("{loc}.closer_side"), "folds carry no closer side")
            }
            (BoundaryKind::OcclusionSharp | BoundaryKind::OcclusionSmooth, None) => report.push(
                "occlusion_missing_side",
                format!("{loc}.closer_side"),
                "occlusion boundaries need a closer side",
            ),
            _ => {}
        }
    }

    let region_ok = poly.len() >= 3;
    for (i, n) in doc.normals.iter().enumerate() {
        let loc = format!("normals[{i}]");
        let v = n.normal();
        if !(v.iter().all(|c| c.is_finite()) && finite(n.position())) {
            report.push("non_finite_value", &loc, "non-finite normal sample");
            continue;
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            report.push("normal_not_unit", &loc, format!("|n| = {norm}"));
        }
        if n.nz <= 0.0 {
            report.push("normal_not_camera_facing", &loc, format!("nz = {} must be > 0", n.nz));
        }
        if region_ok && !point_in_polygon(n.position(), poly) {
            report.push("normal_outside_region", &loc, "sample position is outside the region");
        }
    }
    for (i, f) in doc.planarity.iter().enumerate() {
        if !finite(f.anchor()) {
            report.push("non_finite_value", format!("planarity[{i}]"), "non-finite anchor");
        }
    }
    for (i, r) in doc.relations.iter().enumerate() {
        if !finite(r.a) || !finite(r.b) {
            report.push("non_finite_value", format!("relations[{i}]"), "non-finite anchor");
        }
    }
}

fn surface_checks(doc: &AnnotationDocument, working_resolution: u32, report: &mut ValidationReport) {
    let scale = working_scale(&doc.intrinsics, working_resolution);
    let grid = match rasterize(doc, scale) {
        Ok(g) => g,
        Err(Error::RegionTooSmall { area }) => {
            report.push("region_too_small", "region", format!("region covers {area:.2} px"));
            return;
        }
        Err(e) => {
            report.push(e.code(), "region", e.to_string());
            return;
        }
    };
    for c in &grid.conflicts {
        report.warnings.push(Violation {
            code: "closer_side_conflict".into(),
            location: format!("boundaries[{}]", c.curve),
            message: format!("pixel ({}, {}) drawn with opposing closer sides", c.x, c.y),
        });
    }
    let part = partition(&grid);

    // smooth surface -> planarity flag
    let mut planar: BTreeMap<u32, bool> = BTreeMap::new();
    for (i, f) in doc.planarity.iter().enumerate() {
        let loc = format!("planarity[{i}]");
        match part.resolve_anchor(f.anchor()) {
            Ok(ids) => {
                if let Some(prev) = planar.insert(ids.smooth, f.is_planar) {
                    if prev != f.is_planar {
                        report.push("planarity_conflict", &loc, "surface flagged both planar and curved");
                    }
                }
            }
            Err(e) => report.push(e.code(), &loc, e.to_string()),
        }
    }

    for (i, r) in doc.relations.iter().enumerate() {
        let loc = format!("relations[{i}]");
        let a = part.resolve_anchor(r.a);
        let b = part.resolve_anchor(r.b);
        let (a, b) = match (a, b) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                report.push(e.code(), &loc, e.to_string());
                continue;
            }
        };
        if a.smooth == b.smooth {
            report.push("relation_same_surface", &loc, "both anchors identify the same surface");
        }
        let is_planar = |s: u32| planar.get(&s).copied().unwrap_or(false);
        if !is_planar(a.smooth) || !is_planar(b.smooth) {
            report.push("relation_on_nonplanar", &loc, "relations require both surfaces flagged planar");
        }
    }

    let annotated = annotated_surfaces(doc, &part);
    for (i, f) in doc.planarity.iter().enumerate() {
        if !f.is_planar {
            continue;
        }
        if let Ok(ids) = part.resolve_anchor(f.anchor()) {
            if !annotated.contains_key(&ids.smooth) {
                report.push(
                    "planar_surface_without_normal",
                    format!("planarity[{i}]"),
                    "planar surface has no normal sample",
                );
            }
        }
    }
}

/// Smooth surface -> indices of the normal samples that fall on it.
pub(crate) fn annotated_surfaces(
    doc: &AnnotationDocument,
    part: &SurfacePartition,
) -> BTreeMap<u32, Vec<usize>> {
    let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, n) in doc.normals.iter().enumerate() {
        if let Some(idx) = part.pixel_index(n.position()) {
            if let Some(s) = part.smooth_id[idx] {
                out.entry(s).or_default().push(i);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{
        BoundaryCurve, CameraIntrinsics, NormalSample, PlanarityFlag, RelationKind,
        RelativeNormalRelation, Side,
    };

    fn base() -> AnnotationDocument {
        let mut doc = AnnotationDocument::new(
            "v",
            CameraIntrinsics {
                focal_px: 40.0,
                width: 20,
                height: 20,
            },
        );
        doc.normals.push(NormalSample {
            x: 5.0,
            y: 5.0,
            nx: 0.0,
            ny: 0.0,
            nz: 1.0,
        });
        doc
    }

    #[test]
    fn base_is_valid() {
        assert_eq!(validate(&base()), ValidationReport::default());
    }

    #[test]
    fn two_vertex_polygon() {
        let mut doc = base();
        doc.region.vertices.truncate(2);
        assert!(validate(&doc).has("polygon_too_small"));
    }

    #[test]
    fn fold_with_side() {
        let mut doc = base();
        doc.boundaries.push(BoundaryCurve {
            kind: BoundaryKind::Fold,
            points: vec![[1.0, 1.0], [9.0, 9.0]],
            closer_side: Some(Side::Left),
        });
        let r = validate(&doc);
        assert!(r.has("fold_has_side"));
        assert_eq!(r.violations[0].location, "boundaries[0].closer_side");
    }

    #[test]
    fn half_length_normal() {
        let mut doc = base();
        doc.normals[0].nz = 0.5;
        assert!(validate(&doc).has("normal_not_unit"));
    }

    #[test]
    fn relation_between_curved_surfaces_flagged() {
        let mut doc = base();
        doc.boundaries.push(BoundaryCurve {
            kind: BoundaryKind::OcclusionSharp,
            points: vec![[0.0, 10.5], [20.0, 10.5]],
            closer_side: Some(Side::Left),
        });
        doc.normals.push(NormalSample {
            x: 5.0,
            y: 15.0,
            nx: 0.0,
            ny: 0.0,
            nz: 1.0,
        });
        doc.planarity.push(PlanarityFlag {
            x: 5.0,
            y: 5.0,
            is_planar: false,
        });
        doc.relations.push(RelativeNormalRelation {
            a: [5.0, 5.0],
            b: [5.0, 15.0],
            relation: RelationKind::Parallel,
        });
        let r = validate(&doc);
        assert!(r.has("relation_on_nonplanar"));
        assert!(!r.has("relation_same_surface"));
    }

    #[test]
    fn planar_surface_needs_a_normal() {
        let mut doc = base();
        doc.normals.clear();
        doc.planarity.push(PlanarityFlag {
            x: 5.0,
            y: 5.0,
            is_planar: true,
        });
        assert!(validate(&doc).has("planar_surface_without_normal"));
    }

    #[test]
    fn validate_is_deterministic() {
        let mut doc = base();
        doc.region.vertices = vec![[0.0, 0.0], [20.0, 20.0], [20.0, 0.0], [0.0, 20.0]];
        assert_eq!(validate(&doc), validate(&doc));
        assert!(validate(&doc).has("polygon_self_intersecting"));
    }
}
