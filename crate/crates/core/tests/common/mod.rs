//! Independent oracles and scene builders shared by the integration tests
//! and the acceptance suite.

#![allow(dead_code)]

use std::path::PathBuf;

use anno3d_core::annotation::{AnnotationDocument, BoundaryKind, RelationKind, Side};
use anno3d_core::depth::OrderingTerm;
use anno3d_core::metrics::{BoundaryPrediction, BoundaryTruth, SurfaceRelation};
use anno3d_core::normals::{Normal, NormalConstraintSet};
use anno3d_core::partition::{partition, rasterize, SurfacePartition};
use anno3d_core::synthetic::{curve, normal, rect};
use anno3d_core::Grid;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn partition_of(doc: &AnnotationDocument) -> SurfacePartition {
    partition(&rasterize(doc, 1.0).expect("rasterizes"))
}

/// Minimum of `sum w |x_p - x_q|^2` over the free pixels with constrained
/// pixels fixed, solved as a stacked least-squares problem with one row per
/// edge (SVD, not the normal equations). Returns the energy and the field.
pub fn dense_energy_oracle(
    edges: &[(usize, usize, f64)],
    n: usize,
    constraints: &NormalConstraintSet,
) -> (f64, Vec<Normal>) {
    let fixed: Vec<Option<Normal>> = (0..n).map(|p| constraints.get(p).map(|c| c.normal)).collect();
    let mut slot = vec![usize::MAX; n];
    let mut free = 0;
    for &(p, q, _) in edges {
        for v in [p, q] {
            if fixed[v].is_none() && slot[v] == usize::MAX {
                slot[v] = free;
                free += 1;
            }
        }
    }
    let mut field = vec![Normal::zeros(); n];
    for p in 0..n {
        if let Some(f) = fixed[p] {
            field[p] = f;
        }
    }
    if free > 0 {
        let rows = edges.len();
        let mut a = DMatrix::<f64>::zeros(rows, free);
        let mut b = DMatrix::<f64>::zeros(rows, 3);
        for (r, &(p, q, w)) in edges.iter().enumerate() {
            let s = w.sqrt();
            for (v, sign) in [(p, 1.0), (q, -1.0)] {
                match fixed[v] {
                    Some(f) => {
                        for c in 0..3 {
                            b[(r, c)] -= sign * s * f[c];
                        }
                    }
                    None => a[(r, slot[v])] += sign * s,
                }
            }
        }
        // Free pixels in components without any fixed pixel are only
        // determined up to a constant; the minimum-norm solution pins them.
        let x = a.svd(true, true).solve(&b, 1e-12).expect("svd solve");
        for p in 0..n {
            if slot[p] != usize::MAX {
                field[p] = Normal::new(x[(slot[p], 0)], x[(slot[p], 1)], x[(slot[p], 2)]);
            }
        }
    }
    (edge_energy(edges, &field), field)
}

pub fn edge_energy(edges: &[(usize, usize, f64)], field: &[Normal]) -> f64 {
    edges.iter().map(|&(p, q, w)| w * (field[p] - field[q]).norm_squared()).sum()
}

/// Exact depth (up to scale) of a plane with normal `n` seen by a pinhole
/// camera: proportional to `1 / (f n_z - u n_x - v n_y)`.
pub fn plane_depth(n: Normal, f: f64, u: f64, v: f64) -> f64 {
    1.0 / (f * n.z - u * n.x - v * n.y)
}

/// Brute-force minimum of `sum X + 1000 sum slack` over `X_i` on the grid
/// `eta + k * step`, `k = 0..=steps`. Returns `(objective, scales)`.
pub fn lp_grid_oracle(k: usize, terms: &[OrderingTerm], epsilon: f64, eta: f64, step: f64, steps: usize) -> (f64, Vec<f64>) {
    let mut best = (f64::INFINITY, Vec::new());
    let mut idx = vec![0usize; k];
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| eta + i as f64 * step).collect();
        let slack: f64 = terms
            .iter()
            .map(|t| (t.closer_depth * x[t.closer as usize] + epsilon - t.farther_depth * x[t.farther as usize]).max(0.0))
            .sum();
        let obj = x.iter().sum::<f64>() + 1000.0 * slack;
        if obj < best.0 - 1e-12 {
            best = (obj, x);
        }
        let mut d = 0;
        loop {
            if d == k {
                return best;
            }
            idx[d] += 1;
            if idx[d] <= steps {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

pub fn violated_terms(terms: &[OrderingTerm], x: &[f64], epsilon: f64) -> Vec<usize> {
    (0..terms.len())
        .filter(|&i| {
            let t = &terms[i];
            t.closer_depth * x[t.closer as usize] + epsilon - t.farther_depth * x[t.farther as usize] > 1e-9
        })
        .collect()
}

/// Maximum one-to-one matching between `preds` and `gts` (pixel coords)
/// within distance `tol`, by exhaustive search.
pub fn exhaustive_matching(preds: &[(usize, usize)], gts: &[(usize, usize)], tol: f64) -> usize {
    fn go(i: usize, preds: &[(usize, usize)], gts: &[(usize, usize)], used: &mut Vec<bool>, tol: f64) -> usize {
        if i == preds.len() {
            return 0;
        }
        let mut best = go(i + 1, preds, gts, used, tol);
        for j in 0..gts.len() {
            let d = (preds[i].0 as f64 - gts[j].0 as f64).hypot(preds[i].1 as f64 - gts[j].1 as f64);
            if !used[j] && d <= tol {
                used[j] = true;
                best = best.max(1 + go(i + 1, preds, gts, used, tol));
                used[j] = false;
            }
        }
        best
    }
    go(0, preds, gts, &mut vec![false; gts.len()], tol)
}

pub fn pixels_where(g: &Grid<bool>) -> Vec<(usize, usize)> {
    (0..g.len()).filter(|&i| g[i]).map(|i| g.coords(i)).collect()
}

/// Random camera-facing unit normal with `n_z >= min_z`.
pub fn random_normal(rng: &mut ChaCha8Rng, min_z: f64) -> Normal {
    loop {
        let v = Normal::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(min_z..1.0));
        if v.norm() > 1e-3 && v.z / v.norm() >= min_z {
            return v.normalize();
        }
    }
}

/// Small random scene: a `w x h` rectangle cut by up to three full-length
/// horizontal or vertical boundaries of random kind, with one or two
/// random normals per strip.
pub fn random_scene(seed: u64, max_side: u32) -> AnnotationDocument {
    let mut rng = rng(seed);
    let w = rng.random_range(10..=max_side);
    let h = rng.random_range(10..=max_side);
    let mut doc = rect(&format!("random_{seed}"), w, h, rng.random_range(8.0..60.0));
    let vertical = rng.random_bool(0.5);
    let extent = if vertical { w } else { h };
    let mut cuts: Vec<f64> = Vec::new();
    for _ in 0..rng.random_range(0..=3) {
        let c = rng.random_range(3..extent - 3) as f64 + 0.5;
        if cuts.iter().all(|&o| (o - c).abs() >= 3.0) {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    for &c in &cuts {
        let (a, b) = if vertical {
            ([c, 0.0], [c, h as f64])
        } else {
            ([0.0, c], [w as f64, c])
        };
        let kind = [BoundaryKind::OcclusionSharp, BoundaryKind::OcclusionSmooth, BoundaryKind::Fold][rng.random_range(0..3)];
        let side = (kind != BoundaryKind::Fold).then(|| if rng.random_bool(0.5) { Side::Left } else { Side::Right });
        doc.boundaries.push(curve(kind, &[a, b], side));
    }
    let mut edges = vec![0.0];
    edges.extend(&cuts);
    edges.push(extent as f64);
    for win in edges.windows(2) {
        let (lo, hi) = (win[0].ceil() as u32 + 1, win[1].floor() as u32);
        for _ in 0..rng.random_range(1..=2) {
            if hi <= lo + 1 {
                break;
            }
            let along = rng.random_range(lo..hi) as f64 + 0.5;
            let across = rng.random_range(0..if vertical { h } else { w }) as f64 + 0.5;
            let (x, y) = if vertical { (along, across) } else { (across, along) };
            let n = random_normal(&mut rng, 0.2);
            doc.normals.push(normal(x, y, [n.x, n.y, n.z]));
        }
    }
    doc
}

/// Rectangle cut by `k` full-width horizontal occlusions at random rows,
/// each with a random closer side, and one random normal per strip. The
/// strips form a chain, so the ordering is always acyclic.
pub fn random_stacked_scene(seed: u64) -> AnnotationDocument {
    let mut rng = rng(seed);
    let w = rng.random_range(40..=90u32);
    let h = rng.random_range(50..=100u32);
    let mut doc = rect(&format!("stacked_{seed}"), w, h, rng.random_range(40.0..200.0));
    let k = rng.random_range(1..=3);
    let band = h as f64 / (k + 1) as f64;
    let mut rows = Vec::new();
    for i in 1..=k {
        let y = (band * i as f64 + rng.random_range(-band / 4.0..band / 4.0)).floor() + 0.5;
        rows.push(y);
        let kind = if rng.random_bool(0.3) {
            BoundaryKind::OcclusionSmooth
        } else {
            BoundaryKind::OcclusionSharp
        };
        let side = if rng.random_bool(0.5) { Side::Left } else { Side::Right };
        doc.boundaries.push(curve(kind, &[[0.0, y], [w as f64, y]], Some(side)));
    }
    let mut edges = vec![0.0];
    edges.extend(&rows);
    edges.push(h as f64);
    for win in edges.windows(2) {
        let y = ((win[0] + win[1]) / 2.0).floor() + 0.5;
        let x = rng.random_range(2..w - 2) as f64 + 0.5;
        let n = random_normal(&mut rng, 0.4);
        doc.normals.push(normal(x, y, [n.x, n.y, n.z]));
    }
    doc
}

/// Three relations (one per class) on a 12x1 strip: pixels 0..2 / 2..4 are
/// orthogonal, 4..6 / 6..8 parallel, 8..10 / 10..12 neither.
pub fn strip_relations() -> Vec<SurfaceRelation> {
    let r = |a: usize, b: usize, relation| SurfaceRelation {
        a_pixels: (a..a + 2).collect(),
        b_pixels: (b..b + 2).collect(),
        relation,
    };
    vec![
        r(0, 2, RelationKind::Orthogonal),
        r(4, 6, RelationKind::Parallel),
        r(8, 10, RelationKind::Neither),
    ]
}

/// 8x8 toy case with hand-counted totals at three thresholds.
pub fn toy_boundary() -> (BoundaryPrediction, BoundaryTruth) {
    let mut occ = Grid::new(8, 8, false);
    let mut fold = Grid::new(8, 8, false);
    for x in 1..=6 {
        occ.set(x, 3, true);
    }
    for y in 5..=7 {
        fold.set(1, y, true);
    }
    let mut edge = Grid::new(8, 8, 0.0);
    let mut pf = Grid::new(8, 8, 0.0);
    for x in 1..=6 {
        edge.set(x, 4, if x <= 3 { 0.9 } else { 0.6 });
        pf.set(x, 4, 0.1);
    }
    for (x, y, e, f) in [(2, 5, 0.8, 0.9), (2, 6, 0.8, 0.9), (2, 7, 0.3, 0.9), (6, 0, 0.95, 0.2), (1, 2, 0.7, 0.8)] {
        edge.set(x, y, e);
        pf.set(x, y, f);
    }
    (BoundaryPrediction { edge, fold: pf }, BoundaryTruth { occlusion: occ, fold })
}
