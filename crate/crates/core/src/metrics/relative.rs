use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::normals::angle_deg;
use super::PrPoint;
use crate::annotation::{AnnotationDocument, RelationKind};
use crate::grid::Grid;
use crate::normals::Normal;
use crate::partition::SurfacePartition;
use crate::{Error, Result};

/// Two annotated surfaces (as working-grid pixel lists) and their relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceRelation {
    pub a_pixels: Vec<usize>,
    pub b_pixels: Vec<usize>,
    pub relation: RelationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampledRelationPair {
    pub a: usize,
    pub b: usize,
    pub relation: RelationKind,
    /// Angle between the predicted normals, degrees.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationAuc {
    pub auc_orthogonal: f64,
    pub auc_parallel: f64,
    pub curve_orthogonal: Vec<PrPoint>,
    pub curve_parallel: Vec<PrPoint>,
    pub pairs: Vec<SampledRelationPair>,
}

/// Resolves every relation of `doc` to the member pixels of its two smooth surfaces.
pub fn relation_surfaces(doc: &AnnotationDocument, partition: &SurfacePartition) -> Result<Vec<SurfaceRelation>> {
    let members = partition.smooth_members();
    doc.relations
        .iter()
        .map(|r| {
            let a = partition.resolve_anchor(r.a)?.smooth as usize;
            let b = partition.resolve_anchor(r.b)?.smooth as usize;
            Ok(SurfaceRelation {
                a_pixels: members[a].clone(),
                b_pixels: members[b].clone(),
                relation: r.relation,
            })
        })
        .collect()
}

/// Draws `samples_per_class` pixel pairs per relation class: a random
/// relation of the class, then a random pixel on each of its surfaces.
pub fn sample_relation_pairs(
    relations: &[SurfaceRelation],
    samples_per_class: usize,
    seed: u64,
) -> Result<Vec<(usize, usize, RelationKind)>> {
    let missing: Vec<String> = RelationKind::ALL
        .iter()
        .filter(|k| {
            !relations
                .iter()
                .any(|r| r.relation == **k && !r.a_pixels.is_empty() && !r.b_pixels.is_empty())
        })
        .map(|k| k.name().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingClass(missing));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(3 * samples_per_class);
    for kind in RelationKind::ALL {
        let of_kind: Vec<&SurfaceRelation> = relations
            .iter()
            .filter(|r| r.relation == kind && !r.a_pixels.is_empty() && !r.b_pixels.is_empty())
            .collect();
        for _ in 0..samples_per_class {
            let r = of_kind[rng.random_range(0..of_kind.len())];
            let a = r.a_pixels[rng.random_range(0..r.a_pixels.len())];
            let b = r.b_pixels[rng.random_range(0..r.b_pixels.len())];
            out.push((a, b, kind));
        }
    }
    Ok(out)
}

/// AUC of the orthogonal and parallel detectors built from the angle
/// between predicted normals at sampled pixel pairs.
pub fn relative_normal_auc(
    pred: &Grid<Normal>,
    relations: &[SurfaceRelation],
    samples_per_class: usize,
    seed: u64,
) -> Result<RelationAuc> {
    let sampled = sample_relation_pairs(relations, samples_per_class, seed)?;
    let pairs: Vec<SampledRelationPair> = sampled
        .into_iter()
        .map(|(a, b, relation)| SampledRelationPair {
            a,
            b,
            relation,
            angle: angle_deg(pred[a], pred[b]),
        })
        .collect();
    let folded: Vec<f64> = pairs.iter().map(|p| p.angle.min(180.0 - p.angle)).collect();
    let ortho: Vec<(f64, bool)> = pairs
        .iter()
        .zip(&folded)
        .map(|(p, m)| (90.0 - m, p.relation == RelationKind::Orthogonal))
        .collect();
    let para: Vec<(f64, bool)> = pairs
        .iter()
        .zip(&folded)
        .map(|(p, m)| (*m, p.relation == RelationKind::Parallel))
        .collect();
    let (auc_orthogonal, curve_orthogonal) = pr_auc(&ortho);
    let (auc_parallel, curve_parallel) = pr_auc(&para);
    Ok(RelationAuc {
        auc_orthogonal,
        auc_parallel,
        curve_orthogonal,
        curve_parallel,
        pairs,
    })
}

/// Precision/recall sweep over `(distance, is_positive)` items, predicting
/// positive when `distance <= threshold`, with one threshold per distinct
/// distance. Negatives are weighted by `n_pos / n_neg` so the classes count
/// equally. The curve starts at recall 0 with the precision of its first
/// point; the AUC is the trapezoid rule over recall.
pub fn pr_auc(items: &[(f64, bool)]) -> (f64, Vec<PrPoint>) {
    let n_pos = items.iter().filter(|i| i.1).count();
    let n_neg = items.len() - n_pos;
    if n_pos == 0 {
        return (0.0, Vec::new());
    }
    let w_neg = if n_neg == 0 { 0.0 } else { n_pos as f64 / n_neg as f64 };
    let mut sorted: Vec<(f64, bool)> = items.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut curve = Vec::new();
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < sorted.len() {
        let d = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == d {
            if sorted[i].1 {
                tp += 1.0;
            } else {
                fp += w_neg;
            }
            i += 1;
        }
        curve.push(PrPoint {
            threshold: d,
            precision: tp / (tp + fp),
            recall: tp / n_pos as f64,
        });
    }
    let mut auc = 0.0;
    let (mut r0, mut p0) = (0.0, curve[0].precision);
    for pt in &curve {
        auc += (pt.recall - r0) * 0.5 * (pt.precision + p0);
        r0 = pt.recall;
        p0 = pt.precision;
    }
    (auc, curve)
}
