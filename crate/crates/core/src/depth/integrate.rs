use std::collections::BTreeMap;

use crate::annotation::CameraIntrinsics;
use crate::normals::NormalMap;
use crate::partition::SurfacePartition;
use crate::sparse::{SolverBackend, SymmetricSystem};
use crate::Result;

use super::median;

/// Lower bound on the perspective denominator, as a fraction of the focal length.
const MIN_DENOMINATOR: f64 = 0.05;

/// Log-depth of one continuous surface, gauge-fixed so its median depth is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceDepth {
    pub surface: u32,
    /// Pixel indices in scan order.
    pub pixels: Vec<usize>,
    pub log_depth: Vec<f64>,
}

impl SurfaceDepth {
    pub fn depth(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pixels.iter().copied().zip(self.log_depth.iter().map(|z| z.exp()))
    }
}

/// A discrete log-depth difference `z[to] - z[from]` with its target value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationEdge {
    pub from: usize,
    pub to: usize,
    pub target: f64,
}

/// Target log-depth gradient at a pixel: for a camera-facing normal `n`
/// (x right, y down, z toward the viewer) at centered coordinates `(u, v)`,
/// `d log z / du = n_x / D` and `d log z / dv = n_y / D` with
/// `D = f n_z - u n_x - v n_y`, clamped to at least `0.05 f`.
fn pixel_gradient(normals: &NormalMap, intr: &CameraIntrinsics, idx: usize) -> (f64, f64) {
    let n = normals.normals[idx];
    let (x, y) = normals.normals.coords(idx);
    let (u, v) = intr.centered(x as f64, y as f64);
    let f = intr.focal_px;
    let d = (f * n.z - u * n.x - v * n.y).max(MIN_DENOMINATOR * f);
    (n.x / d, n.y / d)
}

/// Right and down edges between depth-linked pixels of `surface`, with the
/// target difference taken as the mean of the two endpoint gradients.
pub fn integration_edges(
    normals: &NormalMap,
    partition: &SurfacePartition,
    intrinsics: &CameraIntrinsics,
    surface: u32,
) -> Vec<IntegrationEdge> {
    let ids = &partition.continuous_id;
    let mut edges = Vec::new();
    for p in 0..ids.len() {
        if ids[p] != Some(surface) {
            continue;
        }
        let (x, y) = ids.coords(p);
        let gp = pixel_gradient(normals, intrinsics, p);
        if x + 1 < ids.width() {
            let q = p + 1;
            if partition.depth_linked(p, q) {
                let gq = pixel_gradient(normals, intrinsics, q);
                edges.push(IntegrationEdge {
                    from: p,
                    to: q,
                    target: 0.5 * (gp.0 + gq.0),
                });
            }
        }
        if y + 1 < ids.height() {
            let q = p + ids.width();
            if partition.depth_linked(p, q) {
                let gq = pixel_gradient(normals, intrinsics, q);
                edges.push(IntegrationEdge {
                    from: p,
                    to: q,
                    target: 0.5 * (gp.1 + gq.1),
                });
            }
        }
    }
    edges
}

/// Least-squares log-depth for one continuous surface with free boundaries.
///
/// Each connected piece of the edge graph pins its first pixel; the whole
/// surface is then shifted so that the median of `exp(log_depth)` is 1.
pub fn integrate_surface(
    normals: &NormalMap,
    partition: &SurfacePartition,
    intrinsics: &CameraIntrinsics,
    surface: u32,
    backend: SolverBackend,
    tolerance: f64,
) -> Result<SurfaceDepth> {
    let pixels: Vec<usize> = (0..partition.continuous_id.len())
        .filter(|&p| partition.continuous_id[p] == Some(surface))
        .collect();
    if pixels.len() <= 1 {
        return Ok(SurfaceDepth {
            surface,
            log_depth: vec![0.0; pixels.len()],
            pixels,
        });
    }
    let local: BTreeMap<usize, usize> = pixels.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let edges = integration_edges(normals, partition, intrinsics, surface);

    // pin the first pixel of every connected piece
    let mut uf: Vec<usize> = (0..pixels.len()).collect();
    fn find(uf: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while uf[r] != r {
            r = uf[r];
        }
        let mut c = x;
        while uf[c] != r {
            let next = uf[c];
            uf[c] = r;
            c = next;
        }
        r
    }
    for e in &edges {
        let (a, b) = (find(&mut uf, local[&e.from]), find(&mut uf, local[&e.to]));
        if a != b {
            uf[a.max(b)] = a.min(b);
        }
    }
    let pinned: Vec<bool> = (0..pixels.len()).map(|i| find(&mut uf, i) == i).collect();
    let mut unknown = vec![usize::MAX; pixels.len()];
    let mut m = 0;
    for i in 0..pixels.len() {
        if !pinned[i] {
            unknown[i] = m;
            m += 1;
        }
    }

    let mut system = SymmetricSystem::new(m);
    let mut rhs = vec![0.0; m];
    for e in &edges {
        let (a, b) = (unknown[local[&e.from]], unknown[local[&e.to]]);
        // (z_b - z_a - t)^2 with pinned values at 0
        match (a != usize::MAX, b != usize::MAX) {
            (true, true) => {
                system.add_edge(a, b, 1.0);
                rhs[b] += e.target;
                rhs[a] -= e.target;
            }
            (true, false) => {
                system.add(a, a, 1.0);
                rhs[a] -= e.target;
            }
            (false, true) => {
                system.add(b, b, 1.0);
                rhs[b] += e.target;
            }
            (false, false) => {}
        }
    }
    let sol = system.solve(&[rhs], backend, tolerance)?;
    let mut log_depth: Vec<f64> = (0..pixels.len())
        .map(|i| if pinned[i] { 0.0 } else { sol[0][unknown[i]] })
        .collect();

    let med = median(log_depth.iter().map(|z| z.exp())).expect("non-empty surface");
    let shift = med.ln();
    for z in &mut log_depth {
        *z -= shift;
    }
    Ok(SurfaceDepth {
        surface,
        pixels,
        log_depth,
    })
}
