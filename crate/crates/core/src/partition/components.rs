use std::collections::BTreeMap;

use crate::annotation::Point2;
use crate::grid::{Grid, NEIGHBORS_4};
use crate::{Error, Result};

use super::rasterize::PixelGrid;

/// Side tests ignore neighbors that are (numerically) along the curve.
const SIDE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceIds {
    pub smooth: u32,
    pub continuous: u32,
}

/// Continuous/smooth surface labels plus the constrained neighbor graph.
#[derive(Debug, Clone)]
pub struct SurfacePartition {
    pub continuous_id: Grid<Option<u32>>,
    pub smooth_id: Grid<Option<u32>>,
    pub num_continuous: usize,
    pub num_smooth: usize,
    /// Continuous surface containing each smooth surface.
    pub smooth_parent: Vec<u32>,
    /// Bitmask over `NEIGHBORS_4`: Phi(p) minus boundary pixels for interior
    /// pixels, Gamma_O(p) for occlusion pixels, Gamma_F(p) for fold pixels.
    links: Grid<u8>,
    is_occlusion: Grid<bool>,
    is_fold: Grid<bool>,
    side_field: Grid<[f64; 2]>,
    scale: f64,
}

impl SurfacePartition {
    pub fn width(&self) -> usize {
        self.continuous_id.width()
    }

    pub fn height(&self) -> usize {
        self.continuous_id.height()
    }

    pub fn is_occlusion(&self, idx: usize) -> bool {
        self.is_occlusion[idx]
    }

    pub fn is_fold(&self, idx: usize) -> bool {
        self.is_fold[idx]
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.is_occlusion[idx] || self.is_fold[idx]
    }

    pub fn in_region(&self, idx: usize) -> bool {
        self.continuous_id[idx].is_some()
    }

    fn linked(&self, idx: usize) -> Vec<usize> {
        let mask = self.links[idx];
        let (x, y) = self.continuous_id.coords(idx);
        NEIGHBORS_4
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .filter_map(|(_, &(dx, dy))| {
                self.continuous_id
                    .offset_index(x as i64 + dx, y as i64 + dy)
            })
            .collect()
    }

    /// In-region 4-neighbors of `idx`.
    pub fn phi(&self, idx: usize) -> Vec<usize> {
        self.continuous_id
            .neighbors4(idx)
            .filter(|&(j, _)| self.in_region(j))
            .map(|(j, _)| j)
            .collect()
    }

    /// Closer-side neighbors of an occlusion pixel (empty otherwise).
    pub fn gamma_o(&self, idx: usize) -> Vec<usize> {
        if self.is_occlusion[idx] {
            self.linked(idx)
        } else {
            Vec::new()
        }
    }

    /// Attached-side neighbors of a fold pixel (empty otherwise).
    pub fn gamma_f(&self, idx: usize) -> Vec<usize> {
        if self.is_fold[idx] {
            self.linked(idx)
        } else {
            Vec::new()
        }
    }

    /// Undirected edges of the smoothness energy with their multiplicity:
    /// interior pairs appear in both directions of the first sum (weight 2);
    /// boundary attachments appear once (weight 1).
    pub fn smoothness_edges(&self) -> Vec<(usize, usize, f64)> {
        let mut edges = Vec::new();
        for p in 0..self.continuous_id.len() {
            if !self.in_region(p) {
                continue;
            }
            if self.is_boundary(p) {
                for q in self.linked(p) {
                    edges.push((p, q, 1.0));
                }
            } else {
                for q in self.linked(p) {
                    if q > p {
                        edges.push((p, q, 2.0));
                    }
                }
            }
        }
        edges
    }

    /// Closer side (occlusion) or attached side (fold) of a boundary pixel.
    pub fn side_direction(&self, idx: usize) -> [f64; 2] {
        self.side_field[idx]
    }

    /// Whether depth may vary continuously between 4-neighbors `p` and `q`:
    /// same continuous surface and not stepping off an occlusion pixel to its
    /// farther side.
    pub fn depth_linked(&self, p: usize, q: usize) -> bool {
        let (Some(cp), Some(cq)) = (self.continuous_id[p], self.continuous_id[q]) else {
            return false;
        };
        if cp != cq {
            return false;
        }
        let (px, py) = self.continuous_id.coords(p);
        let (qx, qy) = self.continuous_id.coords(q);
        let (dx, dy) = (qx as f64 - px as f64, qy as f64 - py as f64);
        let away = |idx: usize, sx: f64, sy: f64| {
            let d = self.side_field[idx];
            self.is_occlusion[idx] && sx * d[0] + sy * d[1] < -SIDE_EPS
        };
        !(away(p, dx, dy) || away(q, -dx, -dy))
    }

    /// Surface ids under an annotation-space point.
    pub fn resolve_anchor(&self, point: Point2) -> Result<SurfaceIds> {
        let outside = Error::AnchorOutside {
            x: point[0],
            y: point[1],
        };
        let x = (point[0] * self.scale).floor();
        let y = (point[1] * self.scale).floor();
        let Some(idx) = self.continuous_id.offset_index(x as i64, y as i64) else {
            return Err(outside);
        };
        if x < 0.0 || y < 0.0 {
            return Err(outside);
        }
        let (Some(continuous), Some(smooth)) = (self.continuous_id[idx], self.smooth_id[idx])
        else {
            return Err(outside);
        };
        if self.is_boundary(idx) {
            return Err(Error::AnchorOnBoundary {
                x: point[0],
                y: point[1],
            });
        }
        Ok(SurfaceIds { smooth, continuous })
    }

    /// Pixel index under an annotation-space point, if inside the raster.
    pub fn pixel_index(&self, point: Point2) -> Option<usize> {
        let x = (point[0] * self.scale).floor();
        let y = (point[1] * self.scale).floor();
        if x < 0.0 || y < 0.0 {
            return None;
        }
        self.continuous_id.offset_index(x as i64, y as i64)
    }

    /// Pixel indices of every smooth surface, in scan order.
    pub fn smooth_members(&self) -> Vec<Vec<usize>> {
        members(&self.smooth_id, self.num_smooth)
    }

    /// Pixel indices of every continuous surface, in scan order.
    pub fn continuous_members(&self) -> Vec<Vec<usize>> {
        members(&self.continuous_id, self.num_continuous)
    }
}

fn members(ids: &Grid<Option<u32>>, count: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); count];
    for (i, id) in ids.as_slice().iter().enumerate() {
        if let Some(id) = id {
            out[*id as usize].push(i);
        }
    }
    out
}

pub fn partition(grid: &PixelGrid) -> SurfacePartition {
    let (w, h) = grid.region_mask.dims();
    let n = w * h;
    let is_occlusion = grid.boundary_label.map(|l| l.is_occlusion());
    let is_fold = grid.boundary_label.map(|l| l.is_fold());
    let region = &grid.region_mask;

    // continuous: components of region \ O
    let (mut continuous, mut num_continuous) =
        label_components(region, |i| region[i] && !is_occlusion[i]);
    // smooth: components of region \ (O u F)
    let (mut smooth, mut num_smooth) =
        label_components(region, |i| region[i] && !is_occlusion[i] && !is_fold[i]);
    let mut smooth_parent = vec![0u32; num_smooth];
    for i in 0..n {
        if let (Some(s), Some(c)) = (smooth[i], continuous[i]) {
            smooth_parent[s as usize] = c;
        }
    }

    let mut links = Grid::new(w, h, 0u8);
    for i in 0..n {
        if region[i] && !is_occlusion[i] && !is_fold[i] {
            let mut mask = 0u8;
            for (k, (j, _)) in neighbor_slots(region, i) {
                if region[j] && !is_occlusion[j] && !is_fold[j] {
                    mask |= 1 << k;
                }
            }
            links[i] = mask;
        }
    }

    let side_neighbors = |i: usize, accept: &dyn Fn(usize) -> bool| -> Vec<(usize, usize)> {
        let dir = grid.side_field[i];
        neighbor_slots(region, i)
            .filter(|&(_, (j, (dx, dy)))| {
                region[j] && accept(j) && (dx as f64 * dir[0] + dy as f64 * dir[1]) > SIDE_EPS
            })
            .map(|(k, (j, _))| (k, j))
            .collect()
    };

    // folds attach to their fixed (left) side
    let fold_pixels: Vec<usize> = (0..n).filter(|&i| is_fold[i]).collect();
    let mut unresolved = Vec::new();
    for &i in &fold_pixels {
        let cands = side_neighbors(i, &|j| !is_occlusion[j] && !is_fold[j]);
        match majority(cands.iter().map(|&(_, j)| smooth[j].unwrap())) {
            Some(s) => {
                smooth[i] = Some(s);
                for &(k, j) in &cands {
                    if smooth[j] == Some(s) {
                        links[i] |= 1 << k;
                    }
                }
            }
            None => unresolved.push(i),
        }
    }
    propagate(&mut smooth, &unresolved, region, |i, j| {
        is_fold[j] && continuous[j] == continuous[i]
    });
    propagate(&mut smooth, &unresolved, region, |i, j| {
        !is_occlusion[j] && continuous[j] == continuous[i]
    });
    for &i in &unresolved {
        if smooth[i].is_none() {
            smooth[i] = Some(num_smooth as u32);
            smooth_parent.push(continuous[i].expect("fold pixels are off occlusions"));
            num_smooth += 1;
        }
    }

    // occlusions attach to their closer side
    let occ_pixels: Vec<usize> = (0..n).filter(|&i| is_occlusion[i]).collect();
    let mut unresolved = Vec::new();
    for &i in &occ_pixels {
        let cands = side_neighbors(i, &|j| !is_occlusion[j]);
        match majority(cands.iter().map(|&(_, j)| continuous[j].unwrap())) {
            Some(c) => {
                continuous[i] = Some(c);
                let same: Vec<(usize, usize)> = cands
                    .iter()
                    .copied()
                    .filter(|&(_, j)| continuous[j] == Some(c))
                    .collect();
                smooth[i] = majority(same.iter().map(|&(_, j)| smooth[j].unwrap()));
                for (k, _) in same {
                    links[i] |= 1 << k;
                }
            }
            None => unresolved.push(i),
        }
    }
    let curve_of = &grid.boundary_id;
    propagate(&mut continuous, &unresolved, region, |i, j| {
        is_occlusion[j] && curve_of[j] == curve_of[i]
    });
    propagate(&mut continuous, &unresolved, region, |_, j| !is_occlusion[j]);
    for &i in &unresolved {
        if continuous[i].is_none() {
            continuous[i] = Some(num_continuous as u32);
            num_continuous += 1;
        }
    }
    let smooth_missing: Vec<usize> = occ_pixels
        .iter()
        .copied()
        .filter(|&i| smooth[i].is_none())
        .collect();
    propagate(&mut smooth, &smooth_missing, region, |i, j| {
        continuous[j] == continuous[i]
    });
    for &i in &smooth_missing {
        if smooth[i].is_none() {
            smooth[i] = Some(num_smooth as u32);
            smooth_parent.push(continuous[i].unwrap());
            num_smooth += 1;
        }
    }

    SurfacePartition {
        continuous_id: continuous,
        smooth_id: smooth,
        num_continuous,
        num_smooth,
        smooth_parent,
        links,
        is_occlusion,
        is_fold,
        side_field: grid.side_field.clone(),
        scale: grid.scale,
    }
}

fn neighbor_slots(
    region: &Grid<bool>,
    i: usize,
) -> impl Iterator<Item = (usize, (usize, (i64, i64)))> + '_ {
    let (x, y) = region.coords(i);
    NEIGHBORS_4.iter().enumerate().filter_map(move |(k, &(dx, dy))| {
        region
            .offset_index(x as i64 + dx, y as i64 + dy)
            .map(|j| (k, (j, (dx, dy))))
    })
}

/// 4-connected component labels in scan order.
fn label_components(
    region: &Grid<bool>,
    include: impl Fn(usize) -> bool,
) -> (Grid<Option<u32>>, usize) {
    let (w, h) = region.dims();
    let mut labels: Grid<Option<u32>> = Grid::new(w, h, None);
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if labels[start].is_some() || !include(start) {
            continue;
        }
        labels[start] = Some(next);
        stack.push(start);
        while let Some(p) = stack.pop() {
            for (q, _) in region.neighbors4(p) {
                if labels[q].is_none() && include(q) {
                    labels[q] = Some(next);
                    stack.push(q);
                }
            }
        }
        next += 1;
    }
    (labels, next as usize)
}

/// Most frequent value; ties go to the smallest.
fn majority(values: impl Iterator<Item = u32>) -> Option<u32> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|&(_, c)| c == best).map(|(v, _)| v)
}

/// Repeatedly copy labels into unresolved pixels from accepted labeled neighbors.
fn propagate(
    labels: &mut Grid<Option<u32>>,
    pixels: &[usize],
    region: &Grid<bool>,
    accept: impl Fn(usize, usize) -> bool,
) {
    loop {
        let mut changed = false;
        for &i in pixels {
            if labels[i].is_some() {
                continue;
            }
            let found = majority(
                region
                    .neighbors4(i)
                    .filter(|&(j, _)| region[j] && labels[j].is_some() && accept(i, j))
                    .map(|(j, _)| labels[j].unwrap()),
            );
            if found.is_some() {
                labels[i] = found;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}
