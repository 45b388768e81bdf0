//! Evaluation metrics for single-image 3D predictions and the alignment
//! operations used to compare reconstructions.

mod alignment;
mod boundary;
mod depth;
mod normals;
mod planes;
mod relative;

use std::collections::BTreeMap;

use serde::Serialize;

pub use alignment::{
    align_global, align_surfacewise, point_cloud_edist, post_rotation_edist, rotation_candidates, EdistMode,
    RotationSearch,
};
pub use boundary::{
    boundary_counts, boundary_eval, f_score, BoundaryConfig, BoundaryEval, BoundaryPrediction, BoundaryTruth,
    MatchCounts, Matching,
};
pub use depth::{lsiv_rmse, lsiv_rmse_points, ordinal, sample_wkdr_pairs, wkdr, Ordinal, OrdinalPair, WkdrResult, WKDR_EQUAL_RATIO};
pub use normals::{angle_deg, normal_metrics, NormalErrorStats};
pub use planes::{planar_surface_masks, plane_instance_ap, PlaneApResult, PlanePrediction, IOU_THRESHOLDS};
pub use relative::{
    pr_auc, relation_surfaces, relative_normal_auc, sample_relation_pairs, RelationAuc, SampledRelationPair,
    SurfaceRelation,
};

/// One point of a precision/recall sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Named metric values for one image (or an aggregate) plus the curves
/// that produced them.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricReport {
    pub id: String,
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub curves: BTreeMap<String, Vec<PrPoint>>,
}

impl MetricReport {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..Self::default()
        }
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }
}

/// CSV with one row per report; columns are the union of metric names in
/// sorted order, empty where a report lacks a value.
pub fn reports_to_csv(reports: &[MetricReport]) -> String {
    let mut columns: Vec<&str> = reports
        .iter()
        .flat_map(|r| r.values.keys().map(String::as_str))
        .collect();
    columns.sort_unstable();
    columns.dedup();
    let mut out = String::from("id");
    for c in &columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for r in reports {
        out.push_str(&csv_field(&r.id));
        for c in &columns {
            out.push(',');
            if let Some(v) = r.values.get(*c) {
                out.push_str(&format!("{v}"));
            }
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
