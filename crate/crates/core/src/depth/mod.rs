//! From dense normals to ordered, scaled depth.
//!
//! Each continuous surface is integrated independently in log-depth under
//! perspective projection, which fixes its shape up to one scale factor. The
//! scale factors are then chosen by a small LP so that every sampled pair
//! across an occlusion has its closer pixel at least `epsilon` in front.

mod integrate;
mod lp;
mod mesh;
mod ordering;

use crate::annotation::CameraIntrinsics;
use crate::diagnostics::Warning;
use crate::grid::Grid;
use crate::normals::{Normal, NormalMap};

pub use integrate::{integrate_surface, integration_edges, IntegrationEdge, SurfaceDepth};
pub use lp::{solve_ordering_lp, LpSolution, OrderingTerm};
pub use mesh::{build_mesh, Mesh};
pub use ordering::{sample_ordering_pairs, OrderingConstraintSet, OrderingPair};

/// Smallest camera-axis component allowed before integration.
pub const MIN_NORMAL_Z: f64 = 0.3;

/// Depth raster; `NaN` marks pixels without depth.
pub type DepthMap = Grid<f64>;

/// Raises `n_z` to at least 0.3, rescaling `(n_x, n_y)` to keep unit length.
pub fn snap_normals(map: &NormalMap) -> NormalMap {
    let normals = map.normals.map(|&n| snap_normal(n));
    NormalMap {
        normals,
        valid: map.valid.clone(),
    }
}

pub fn snap_normal(n: Normal) -> Normal {
    if n.z >= MIN_NORMAL_Z || n == Normal::zeros() {
        return n;
    }
    let planar = n.x.hypot(n.y);
    assert!(planar > 0.0, "unit normal with n_z < {MIN_NORMAL_Z} has an in-plane part");
    let k = (1.0 - MIN_NORMAL_Z * MIN_NORMAL_Z).sqrt() / planar;
    Normal::new(n.x * k, n.y * k, MIN_NORMAL_Z)
}

/// Camera-frame point (x right, y down, z forward) per pixel with positive depth.
pub fn backproject(
    depth: &DepthMap,
    intrinsics: &CameraIntrinsics,
) -> (Grid<Option<[f64; 3]>>, Vec<Warning>) {
    let f = intrinsics.focal_px;
    let mut nonpositive = 0usize;
    let points = Grid::from_fn(depth.width(), depth.height(), |x, y| {
        let z = *depth.get(x, y);
        if z.is_nan() {
            return None;
        }
        if !(z > 0.0 && z.is_finite()) {
            nonpositive += 1;
            return None;
        }
        let (u, v) = intrinsics.centered(x as f64, y as f64);
        Some([u * z / f, v * z / f, z])
    });
    let mut warnings = Vec::new();
    if nonpositive > 0 {
        warnings.push(Warning::new(
            "nonpositive_depth",
            format!("{nonpositive} pixels with non-positive depth excluded from the point cloud"),
        ));
    }
    (points, warnings)
}

/// Median of finite values (mean of the two middle values for even counts).
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snap_leaves_frontal_and_steep_enough() {
        assert_eq!(snap_normal(Normal::z()), Normal::z());
        let n = Normal::new(0.6, 0.0, 0.8);
        assert_eq!(snap_normal(n), n);
    }

    #[test]
    fn snap_grazing_normal() {
        let s = snap_normal(Normal::x());
        assert_eq!(s, Normal::new(0.91f64.sqrt(), 0.0, 0.3));
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn backproject_axis_and_45_degree_ray() {
        let intr = CameraIntrinsics {
            focal_px: 3.0,
            width: 8,
            height: 8,
        };
        let mut depth = Grid::new(8, 8, f64::NAN);
        depth.set(4, 4, 2.0);
        depth.set(8 - 1, 4, 1.0);
        depth.set(0, 0, -1.0);
        let (pts, warnings) = backproject(&depth, &intr);
        assert_eq!(*pts.get(4, 4), Some([0.0, 0.0, 2.0]));
        // u = 7 - 4 = f
        assert_eq!(*pts.get(7, 4), Some([1.0, 0.0, 1.0]));
        assert!(pts.get(0, 0).is_none());
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn doubling_focal_halves_lateral_coordinates() {
        let mut depth = Grid::new(6, 6, f64::NAN);
        depth.set(5, 1, 3.0);
        let a = CameraIntrinsics {
            focal_px: 5.0,
            width: 6,
            height: 6,
        };
        let b = CameraIntrinsics { focal_px: 10.0, ..a };
        let pa = backproject(&depth, &a).0.get(5, 1).unwrap();
        let pb = backproject(&depth, &b).0.get(5, 1).unwrap();
        assert_eq!(pb[0] * 2.0, pa[0]);
        assert_eq!(pb[1] * 2.0, pa[1]);
        assert_eq!(pa[2], pb[2]);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median([3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median([4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median([f64::NAN]), None);
    }
}
