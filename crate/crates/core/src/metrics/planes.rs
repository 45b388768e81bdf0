use serde::Serialize;

use super::boundary::average_precision;
use super::depth::check_shape;
use super::PrPoint;
use crate::annotation::AnnotationDocument;
use crate::grid::Grid;
use crate::partition::SurfacePartition;
use crate::{Error, Result};

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub const IOU_THRESHOLDS: [f64; 10] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

#[derive(Debug, Clone, PartialEq)]
pub struct PlanePrediction {
    pub mask: Grid<bool>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneApResult {
    /// Mean AP over all IoU thresholds.
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
    /// `(iou_threshold, ap)` per threshold.
    pub per_threshold: Vec<(f64, f64)>,
    pub curves: Vec<Vec<PrPoint>>,
}

/// Masks of the smooth surfaces flagged planar, in surface-id order.
/// A surface flagged both ways counts as planar.
pub fn planar_surface_masks(doc: &AnnotationDocument, partition: &SurfacePartition) -> Result<Vec<Grid<bool>>> {
    let mut ids = Vec::new();
    for f in doc.planarity.iter().filter(|f| f.is_planar) {
        ids.push(partition.resolve_anchor(f.anchor())?.smooth);
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids
        .into_iter()
        .map(|id| partition.smooth_id.map(|s| *s == Some(id)))
        .collect())
}

/// Instance-level average precision of predicted plane masks.
///
/// Predictions are visited by decreasing confidence; each takes the
/// still-unmatched ground-truth mask with the highest IoU if that IoU
/// reaches the threshold, otherwise it is a false positive (so duplicate
/// detections are penalized).
pub fn plane_instance_ap(preds: &[PlanePrediction], gts: &[Grid<bool>]) -> Result<PlaneApResult> {
    for (i, g) in gts.iter().enumerate() {
        check_shape(&gts[0], g)?;
        for (j, h) in gts.iter().enumerate().skip(i + 1) {
            if (0..g.len()).any(|k| g[k] && h[k]) {
                return Err(Error::GtNotPartition(i, j));
            }
        }
    }
    if let Some(g0) = gts.first() {
        for p in preds {
            check_shape(g0, &p.mask)?;
        }
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].confidence.total_cmp(&preds[a].confidence).then(a.cmp(&b)));
    let areas: Vec<usize> = gts.iter().map(|g| g.as_slice().iter().filter(|&&v| v).count()).collect();
    let iou: Vec<Vec<f64>> = order
        .iter()
        .map(|&p| {
            let m = &preds[p].mask;
            let area = m.as_slice().iter().filter(|&&v| v).count();
            gts.iter()
                .zip(&areas)
                .map(|(g, &ga)| {
                    let inter = (0..g.len()).filter(|&k| g[k] && m[k]).count();
                    let union = area + ga - inter;
                    if union == 0 {
                        0.0
                    } else {
                        inter as f64 / union as f64
                    }
                })
                .collect()
        })
        .collect();

    let mut per_threshold = Vec::with_capacity(IOU_THRESHOLDS.len());
    let mut curves = Vec::with_capacity(IOU_THRESHOLDS.len());
    for &t in &IOU_THRESHOLDS {
        let mut taken = vec![false; gts.len()];
        let mut tp = 0usize;
        let mut curve = Vec::with_capacity(order.len());
        for (rank, row) in iou.iter().enumerate() {
            let best = (0..gts.len())
                .filter(|&g| !taken[g] && row[g] >= t)
                .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)));
            if let Some(g) = best {
                taken[g] = true;
                tp += 1;
            }
            curve.push(PrPoint {
                threshold: preds[order[rank]].confidence,
                precision: tp as f64 / (rank + 1) as f64,
                recall: if gts.is_empty() { 1.0 } else { tp as f64 / gts.len() as f64 },
            });
        }
        let ap = if gts.is_empty() {
            if preds.is_empty() {
                1.0
            } else {
                0.0
            }
        } else {
            average_precision(&curve)
        };
        per_threshold.push((t, ap));
        curves.push(curve);
    }
    let ap = per_threshold.iter().map(|x| x.1).sum::<f64>() / per_threshold.len() as f64;
    Ok(PlaneApResult {
        ap,
        ap50: per_threshold[0].1,
        ap75: per_threshold[5].1,
        per_threshold,
        curves,
    })
}
