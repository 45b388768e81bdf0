use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::annotation::AnnotationDocument;
use crate::config::ReconstructionConfig;
use crate::grid::Grid;
use crate::pipeline::reconstruct;
use crate::{Error, Result};

/// Largest rotation considered by [`post_rotation_edist`], degrees.
const MAX_ROTATION_DEG: f64 = 30.0;
const COARSE_ANGLES_DEG: [f64; 6] = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
const REFINE_STEP_DEG: f64 = 2.5;
const MAX_REFINE_ROUNDS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdistMode {
    /// One scale and one 3D translation for the whole cloud.
    GlobalScaleTranslate,
    /// One scale per surface and a shared 3D translation.
    SurfacewiseScale,
}

fn require_points(n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::InsufficientData(format!("{n} correspondences, need at least 4")));
    }
    Ok(())
}

/// Least-squares `s` and `t` minimizing `sum |s a_i + t - b_i|^2`.
pub fn align_global(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<(f64, [f64; 3])> {
    require_points(a.len().min(b.len()))?;
    let n = a.len() as f64;
    let mean = |pts: &[[f64; 3]]| {
        let mut m = [0.0; 3];
        for p in pts {
            for k in 0..3 {
                m[k] += p[k] / n;
            }
        }
        m
    };
    let (ma, mb) = (mean(a), mean(b));
    let (mut num, mut den) = (0.0, 0.0);
    for (p, q) in a.iter().zip(b) {
        for k in 0..3 {
            num += (p[k] - ma[k]) * (q[k] - mb[k]);
            den += (p[k] - ma[k]).powi(2);
        }
    }
    if den == 0.0 {
        return Err(Error::InsufficientData("source cloud collapses to a point".into()));
    }
    let s = num / den;
    Ok((s, [mb[0] - s * ma[0], mb[1] - s * ma[1], mb[2] - s * ma[2]]))
}

/// Least-squares per-surface scales and one shared translation.
pub fn align_surfacewise(
    a: &[[f64; 3]],
    b: &[[f64; 3]],
    surfaces: &[u32],
) -> Result<(BTreeMap<u32, f64>, [f64; 3])> {
    require_points(a.len().min(b.len()))?;
    let ids: Vec<u32> = {
        let mut v = surfaces.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let slot: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let k = ids.len();
    let mut m = DMatrix::<f64>::zeros(k + 3, k + 3);
    let mut rhs = DVector::<f64>::zeros(k + 3);
    for ((p, q), s) in a.iter().zip(b).zip(surfaces) {
        let j = slot[s];
        let pp: f64 = p.iter().map(|x| x * x).sum();
        let pq: f64 = p.iter().zip(q).map(|(x, y)| x * y).sum();
        m[(j, j)] += pp;
        rhs[j] += pq;
        for c in 0..3 {
            m[(j, k + c)] += p[c];
            m[(k + c, j)] += p[c];
            m[(k + c, k + c)] += 1.0;
            rhs[k + c] += q[c];
        }
    }
    let x = m
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Solver(format!("surfacewise alignment: {e}")))?;
    let scales = ids.iter().enumerate().map(|(i, &s)| (s, x[i])).collect();
    Ok((scales, [x[k], x[k + 1], x[k + 2]]))
}

/// Mean Euclidean distance between corresponding points after aligning `a` to `b`.
pub fn point_cloud_edist(a: &[[f64; 3]], b: &[[f64; 3]], surfaces: &[u32], mode: EdistMode) -> Result<f64> {
    if a.len() != b.len() || a.len() != surfaces.len() {
        return Err(Error::InvalidArgument(format!(
            "correspondence lists differ in length: {}, {}, {}",
            a.len(),
            b.len(),
            surfaces.len()
        )));
    }
    let dist = |p: &[f64; 3], q: &[f64; 3], s: f64, t: &[f64; 3]| {
        let d = [s * p[0] + t[0] - q[0], s * p[1] + t[1] - q[1], s * p[2] + t[2] - q[2]];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    };
    let total: f64 = match mode {
        EdistMode::GlobalScaleTranslate => {
            let (s, t) = align_global(a, b)?;
            a.iter().zip(b).map(|(p, q)| dist(p, q, s, &t)).sum()
        }
        EdistMode::SurfacewiseScale => {
            let (scales, t) = align_surfacewise(a, b, surfaces)?;
            a.iter()
                .zip(b)
                .zip(surfaces)
                .map(|((p, q), id)| dist(p, q, scales[id], &t))
                .sum()
        }
    };
    Ok(total / a.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationSearch {
    /// Smallest EDist found, including the unrotated annotation.
    pub edist: f64,
    pub unrotated_edist: f64,
    /// Axis-angle of the best rotation (axis is zero for the identity).
    pub axis: [f64; 3],
    pub angle_deg: f64,
    pub evaluated: usize,
}

/// Identity plus every direction of the 3x3x3 lattice at each coarse angle.
pub fn rotation_candidates() -> Vec<Rotation3<f64>> {
    let mut out = vec![Rotation3::identity()];
    for x in -1..=1 {
        for y in -1..=1 {
            for z in -1..=1 {
                if (x, y, z) == (0, 0, 0) {
                    continue;
                }
                let axis = Unit::new_normalize(Vector3::new(x as f64, y as f64, z as f64));
                for a in COARSE_ANGLES_DEG {
                    out.push(Rotation3::from_axis_angle(&axis, a.to_radians()));
                }
            }
        }
    }
    out
}

/// Rotates every annotated normal of `doc` by candidate rotations, rebuilds
/// the shape, and reports the smallest EDist to `gt` (pixel-aligned at the
/// working resolution). Rotations that turn a normal away from the camera
/// are skipped.
pub fn post_rotation_edist(
    doc: &AnnotationDocument,
    gt: &Grid<Option<[f64; 3]>>,
    config: &ReconstructionConfig,
    mode: EdistMode,
) -> Result<RotationSearch> {
    let mut evaluated = 0usize;
    let mut score = |r: &Rotation3<f64>| -> Result<Option<f64>> {
        let mut rotated = doc.clone();
        for s in &mut rotated.normals {
            let n = r * s.normal();
            if n.z <= 0.0 {
                return Ok(None);
            }
            *s = s.with_normal(n);
        }
        let rec = reconstruct(&rotated, config)?;
        if !rec.points.same_shape(gt) {
            return Err(Error::ShapeMismatch {
                expected: rec.points.dims(),
                got: gt.dims(),
            });
        }
        let (mut a, mut b, mut ids) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..gt.len() {
            if let (Some(p), Some(q), Some(s)) = (rec.points[i], gt[i], rec.partition.continuous_id[i]) {
                a.push(p);
                b.push(q);
                ids.push(s);
            }
        }
        evaluated += 1;
        point_cloud_edist(&a, &b, &ids, mode).map(Some)
    };

    let unrotated = score(&Rotation3::identity())?.expect("identity keeps normals camera-facing");
    let mut best = (unrotated, Rotation3::identity());
    for r in rotation_candidates().iter().skip(1) {
        if let Some(e) = score(r)? {
            if e < best.0 {
                best = (e, *r);
            }
        }
    }
    let step = REFINE_STEP_DEG.to_radians();
    for _ in 0..MAX_REFINE_ROUNDS {
        let mut improved = false;
        for axis in [Vector3::x_axis(), Vector3::y_axis(), Vector3::z_axis()] {
            for sign in [1.0, -1.0] {
                let r = Rotation3::from_axis_angle(&axis, sign * step) * best.1;
                if r.angle().to_degrees() > MAX_ROTATION_DEG + 1e-9 {
                    continue;
                }
                if let Some(e) = score(&r)? {
                    if e < best.0 {
                        best = (e, r);
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    let (axis, angle) = best
        .1
        .axis_angle()
        .map_or(([0.0; 3], 0.0), |(ax, ang)| ([ax.x, ax.y, ax.z], ang.to_degrees()));
    Ok(RotationSearch {
        edist: best.0,
        unrotated_edist: unrotated,
        axis,
        angle_deg: angle,
        evaluated,
    })
}
