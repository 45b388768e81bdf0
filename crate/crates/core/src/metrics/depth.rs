use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::annotation::CameraIntrinsics;
use crate::depth::{backproject, DepthMap};
use crate::grid::Grid;
use crate::{Error, Result};

/// Two depths are "equal" when their ratio is below `1 + WKDR_EQUAL_RATIO`.
pub const WKDR_EQUAL_RATIO: f64 = 0.02;

type Cloud = Grid<Option<[f64; 3]>>;

/// Backprojects both depth maps with their own focal lengths and scores
/// the prediction against the ground truth per continuous surface.
pub fn lsiv_rmse(
    pred: &DepthMap,
    pred_intrinsics: &CameraIntrinsics,
    gt: &DepthMap,
    gt_intrinsics: &CameraIntrinsics,
    gt_surfaces: &Grid<Option<u32>>,
) -> Result<f64> {
    check_shape(gt, pred)?;
    let (p, _) = backproject(pred, pred_intrinsics);
    let (g, _) = backproject(gt, gt_intrinsics);
    lsiv_rmse_points(&p, &g, gt_surfaces)
}

/// Locally scale-invariant RMSE on pixel-aligned point clouds.
///
/// The ground truth is divided by the standard deviation of its X
/// coordinates; each ground-truth surface then gets its own least-squares
/// scale and z-offset applied to the prediction.
pub fn lsiv_rmse_points(pred: &Cloud, gt: &Cloud, gt_surfaces: &Grid<Option<u32>>) -> Result<f64> {
    check_shape(gt, pred)?;
    check_shape(gt, gt_surfaces)?;
    let valid: Vec<usize> = (0..gt.len())
        .filter(|&i| gt[i].is_some() && pred[i].is_some() && gt_surfaces[i].is_some())
        .collect();
    if valid.is_empty() {
        return Err(Error::DegenerateGroundTruth("no pixel valid in both clouds".into()));
    }
    let n = valid.len() as f64;
    let mean_x = valid.iter().map(|&i| gt[i].unwrap()[0]).sum::<f64>() / n;
    let var_x = valid.iter().map(|&i| (gt[i].unwrap()[0] - mean_x).powi(2)).sum::<f64>() / n;
    let sigma = var_x.sqrt();
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::DegenerateGroundTruth("ground-truth X coordinates have zero spread".into()));
    }

    let num_surfaces = valid.iter().map(|&i| gt_surfaces[i].unwrap() as usize + 1).max().unwrap_or(0);
    let mut members = vec![Vec::new(); num_surfaces];
    for &i in &valid {
        members[gt_surfaces[i].unwrap() as usize].push(i);
    }
    let mut total = 0.0;
    for pixels in members.iter().filter(|m| !m.is_empty()) {
        let target: Vec<[f64; 3]> = pixels.iter().map(|&i| gt[i].unwrap().map(|c| c / sigma)).collect();
        let points: Vec<[f64; 3]> = pixels.iter().map(|&i| pred[i].unwrap()).collect();
        let (lambda, delta) = fit_scale_z_shift(&points, &target);
        for (p, t) in points.iter().zip(&target) {
            let r = [t[0] - lambda * p[0], t[1] - lambda * p[1], t[2] - lambda * p[2] - delta];
            total += r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
        }
    }
    Ok((total / n).sqrt())
}

/// Minimizes `sum |t - lambda p - (0, 0, delta)|^2` over `lambda >= 0` and `delta`.
fn fit_scale_z_shift(points: &[[f64; 3]], target: &[[f64; 3]]) -> (f64, f64) {
    if points.len() < 2 {
        return (1.0, 0.0);
    }
    let n = points.len() as f64;
    let (mut a, mut b, mut c1, mut c2) = (0.0, 0.0, 0.0, 0.0);
    for (p, t) in points.iter().zip(target) {
        a += p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        b += p[2];
        c1 += p[0] * t[0] + p[1] * t[1] + p[2] * t[2];
        c2 += t[2];
    }
    let det = n * a - b * b;
    if det <= 1e-12 * n * a {
        // points collinear with the optical axis at one depth: scale and shift trade off
        return (0.0, c2 / n);
    }
    let lambda = (n * c1 - b * c2) / det;
    if lambda < 0.0 {
        return (0.0, c2 / n);
    }
    (lambda, (c2 - lambda * b) / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordinal {
    /// First pixel is closer.
    Closer,
    Farther,
    Equal,
}

pub fn ordinal(z1: f64, z2: f64, t_eq: f64) -> Ordinal {
    if z1.max(z2) / z1.min(z2) < 1.0 + t_eq {
        Ordinal::Equal
    } else if z1 < z2 {
        Ordinal::Closer
    } else {
        Ordinal::Farther
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrdinalPair {
    pub a: usize,
    pub b: usize,
    pub truth: Ordinal,
    pub predicted: Ordinal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WkdrResult {
    /// Percentage of pairs whose predicted relation disagrees with the truth.
    pub percent: f64,
    pub pairs: Vec<OrdinalPair>,
}

/// Samples `n_pairs / 2` uniform pairs of valid pixels and `n_pairs / 2`
/// pairs on a shared random row.
pub fn sample_wkdr_pairs(valid: &Grid<bool>, n_pairs: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if !n_pairs.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("n_pairs must be even, got {n_pairs}")));
    }
    let all: Vec<usize> = (0..valid.len()).filter(|&i| valid[i]).collect();
    if all.len() < 2 {
        return Err(Error::InsufficientData(format!("{} valid pixels, need at least 2", all.len())));
    }
    let rows: Vec<Vec<usize>> = (0..valid.height())
        .map(|y| (0..valid.width()).map(|x| valid.index(x, y)).filter(|&i| valid[i]).collect::<Vec<_>>())
        .filter(|r| r.len() >= 2)
        .collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData("no row has two valid pixels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs / 2 {
        pairs.push(distinct_pair(&mut rng, &all));
    }
    for _ in 0..n_pairs / 2 {
        let row = &rows[rng.random_range(0..rows.len())];
        pairs.push(distinct_pair(&mut rng, row));
    }
    Ok(pairs)
}

fn distinct_pair(rng: &mut ChaCha8Rng, from: &[usize]) -> (usize, usize) {
    let i = rng.random_range(0..from.len());
    let mut j = rng.random_range(0..from.len() - 1);
    if j >= i {
        j += 1;
    }
    (from[i], from[j])
}

/// Weighted kinect disagreement rate over pixels valid in both maps.
pub fn wkdr(pred: &DepthMap, gt: &DepthMap, n_pairs: usize, seed: u64) -> Result<WkdrResult> {
    check_shape(gt, pred)?;
    let usable = |z: f64| z.is_finite() && z > 0.0;
    let valid = Grid::from_fn(gt.width(), gt.height(), |x, y| usable(*gt.get(x, y)) && usable(*pred.get(x, y)));
    let sampled = sample_wkdr_pairs(&valid, n_pairs, seed)?;
    let pairs: Vec<OrdinalPair> = sampled
        .into_iter()
        .map(|(a, b)| OrdinalPair {
            a,
            b,
            truth: ordinal(gt[a], gt[b], WKDR_EQUAL_RATIO),
            predicted: ordinal(pred[a], pred[b], WKDR_EQUAL_RATIO),
        })
        .collect();
    let wrong = pairs.iter().filter(|p| p.truth != p.predicted).count();
    Ok(WkdrResult {
        percent: if pairs.is_empty() {
            0.0
        } else {
            100.0 * wrong as f64 / pairs.len() as f64
        },
        pairs,
    })
}

pub(super) fn check_shape<A, B>(expected: &Grid<A>, got: &Grid<B>) -> Result<()> {
    if expected.same_shape(got) {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            expected: expected.dims(),
            got: got.dims(),
        })
    }
}
