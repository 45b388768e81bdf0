use serde::{Deserialize, Serialize};

use super::depth::check_shape;
use super::PrPoint;
use crate::grid::Grid;
use crate::partition::SurfacePartition;
use crate::{Error, Result};

/// Per-pixel edge probability and fold probability.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPrediction {
    pub edge: Grid<f64>,
    pub fold: Grid<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTruth {
    pub occlusion: Grid<bool>,
    pub fold: Grid<bool>,
}

impl BoundaryTruth {
    /// Rasterized occlusion and fold pixels of a partitioned annotation.
    pub fn from_partition(partition: &SurfacePartition) -> Self {
        let (w, h) = (partition.width(), partition.height());
        Self {
            occlusion: Grid::from_vec(w, h, (0..w * h).map(|i| partition.is_occlusion(i)).collect()),
            fold: Grid::from_vec(w, h, (0..w * h).map(|i| partition.is_fold(i)).collect()),
        }
    }

    /// The truth itself as a prediction with probabilities 0 or 1.
    pub fn as_prediction(&self) -> BoundaryPrediction {
        let one = |b: &bool| if *b { 1.0 } else { 0.0 };
        let edge = Grid::from_vec(
            self.occlusion.width(),
            self.occlusion.height(),
            (0..self.occlusion.len()).map(|i| one(&(self.occlusion[i] || self.fold[i]))).collect(),
        );
        BoundaryPrediction {
            edge,
            fold: self.fold.map(one),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matching {
    /// Candidate pairs accepted in order of increasing distance.
    Greedy,
    /// Maximum-cardinality matching by augmenting paths.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConfig {
    pub thresholds: Vec<f64>,
    /// Match distance as a fraction of the image diagonal.
    pub tolerance_fraction: f64,
    /// Absolute match distance in pixels; overrides `tolerance_fraction`.
    pub tolerance_px: Option<f64>,
    pub matching: Matching,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        Self {
            thresholds: (1..=99).map(|i| i as f64 / 100.0).collect(),
            tolerance_fraction: 0.0075,
            tolerance_px: None,
            matching: Matching::Greedy,
        }
    }
}

impl BoundaryConfig {
    pub fn tolerance(&self, width: usize, height: usize) -> f64 {
        self.tolerance_px
            .unwrap_or_else(|| self.tolerance_fraction * (width as f64).hypot(height as f64))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl MatchCounts {
    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn f(&self) -> f64 {
        f_score(self.precision(), self.recall())
    }
}

impl std::ops::AddAssign for MatchCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

pub fn f_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryEval {
    pub ods: f64,
    pub ods_threshold: f64,
    pub ois: f64,
    pub ap: f64,
    /// Dataset-level sweep, one point per threshold.
    pub curve: Vec<PrPoint>,
    /// `counts[image][threshold]`, occlusion and fold summed.
    pub counts: Vec<Vec<MatchCounts>>,
}

/// Joint occlusion + fold counts for one image at threshold `tau`: pixels
/// with `edge > tau` are predicted as folds when `fold > 0.5` and as
/// occlusions otherwise, and each class is matched against its own truth.
pub fn boundary_counts(
    pred: &BoundaryPrediction,
    gt: &BoundaryTruth,
    tau: f64,
    tolerance: f64,
    matching: Matching,
) -> Result<MatchCounts> {
    check_shape(&gt.occlusion, &pred.edge)?;
    check_shape(&gt.occlusion, &pred.fold)?;
    check_shape(&gt.occlusion, &gt.fold)?;
    let mut occ = Vec::new();
    let mut fold = Vec::new();
    for i in 0..pred.edge.len() {
        if pred.edge[i] > tau {
            if pred.fold[i] > 0.5 {
                fold.push(i);
            } else {
                occ.push(i);
            }
        }
    }
    let gt_occ: Vec<usize> = (0..gt.occlusion.len()).filter(|&i| gt.occlusion[i]).collect();
    let gt_fold: Vec<usize> = (0..gt.fold.len()).filter(|&i| gt.fold[i]).collect();
    let w = pred.edge.width();
    let mut counts = match_pixels(&occ, &gt_occ, w, tolerance, matching);
    counts += match_pixels(&fold, &gt_fold, w, tolerance, matching);
    Ok(counts)
}

fn match_pixels(pred: &[usize], gt: &[usize], width: usize, tol: f64, matching: Matching) -> MatchCounts {
    let xy = |i: usize| ((i % width) as i64, (i / width) as i64);
    let mut gt_at = std::collections::HashMap::with_capacity(gt.len());
    for (b, &g) in gt.iter().enumerate() {
        gt_at.insert(xy(g), b);
    }
    let reach = tol.max(0.0).floor() as i64;
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (a, &p) in pred.iter().enumerate() {
        let (px, py) = xy(p);
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let Some(&b) = gt_at.get(&(px + dx, py + dy)) else {
                    continue;
                };
                let d = (dx as f64).hypot(dy as f64);
                if d <= tol {
                    candidates.push((d, a, b));
                }
            }
        }
    }
    let matched = match matching {
        Matching::Greedy => {
            candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            let mut used_p = vec![false; pred.len()];
            let mut used_g = vec![false; gt.len()];
            let mut m = 0;
            for (_, a, b) in candidates {
                if !used_p[a] && !used_g[b] {
                    used_p[a] = true;
                    used_g[b] = true;
                    m += 1;
                }
            }
            m
        }
        Matching::Exact => {
            let mut adj = vec![Vec::new(); pred.len()];
            for (_, a, b) in candidates {
                adj[a].push(b);
            }
            max_bipartite_matching(&adj, gt.len())
        }
    };
    MatchCounts {
        tp: matched,
        fp: pred.len() - matched,
        fn_: gt.len() - matched,
    }
}

fn max_bipartite_matching(adj: &[Vec<usize>], n_right: usize) -> usize {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n_right];
    let mut total = 0;
    for u in 0..adj.len() {
        let mut seen = vec![false; n_right];
        if augment(u, adj, &mut seen, &mut owner) {
            total += 1;
        }
    }
    total
}

/// ODS, OIS and AP over a set of images.
pub fn boundary_eval(
    preds: &[BoundaryPrediction],
    gts: &[BoundaryTruth],
    config: &BoundaryConfig,
) -> Result<BoundaryEval> {
    if preds.len() != gts.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} ground-truth images",
            preds.len(),
            gts.len()
        )));
    }
    if config.thresholds.is_empty() {
        return Err(Error::InvalidArgument("empty threshold list".into()));
    }
    let counts = preds
        .iter()
        .zip(gts)
        .map(|(p, g)| {
            let tol = config.tolerance(g.occlusion.width(), g.occlusion.height());
            config
                .thresholds
                .iter()
                .map(|&t| boundary_counts(p, g, t, tol, config.matching))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let totals: Vec<MatchCounts> = (0..config.thresholds.len())
        .map(|k| {
            let mut c = MatchCounts::default();
            for image in &counts {
                c += image[k];
            }
            c
        })
        .collect();
    let curve: Vec<PrPoint> = totals
        .iter()
        .zip(&config.thresholds)
        .map(|(c, &t)| PrPoint {
            threshold: t,
            precision: c.precision(),
            recall: c.recall(),
        })
        .collect();
    let (mut ods, mut ods_threshold) = (f64::NEG_INFINITY, config.thresholds[0]);
    for (c, &t) in totals.iter().zip(&config.thresholds) {
        if c.f() > ods {
            ods = c.f();
            ods_threshold = t;
        }
    }

    let mut best = MatchCounts::default();
    for image in &counts {
        let mut pick = image[0];
        for c in &image[1..] {
            if c.f() > pick.f() {
                pick = *c;
            }
        }
        best += pick;
    }

    Ok(BoundaryEval {
        ods,
        ods_threshold,
        ois: best.f(),
        ap: average_precision(&curve),
        curve,
        counts,
    })
}

/// Area under the precision envelope: recall steps from 0, each weighted by
/// the best precision reached at that recall or higher.
pub(super) fn average_precision(curve: &[PrPoint]) -> f64 {
    let mut pts: Vec<(f64, f64)> = curve.iter().map(|p| (p.recall, p.precision)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut ap = 0.0;
    let mut prev_r = 0.0;
    for i in 0..pts.len() {
        let r = pts[i].0;
        if r <= prev_r {
            continue;
        }
        let envelope = pts[i..].iter().map(|p| p.1).fold(0.0, f64::max);
        ap += (r - prev_r) * envelope;
        prev_r = r;
    }
    ap
}
