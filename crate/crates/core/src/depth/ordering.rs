use serde::Serialize;

use crate::diagnostics::Warning;
use crate::partition::{PixelGrid, SurfacePartition};

/// `closer` must end up in front of `farther` after scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrderingPair {
    pub closer: usize,
    pub farther: usize,
    pub boundary: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OrderingConstraintSet {
    pub pairs: Vec<OrderingPair>,
}

/// Walks each occlusion curve and emits one pair every `stride` of its
/// pixels: the nearest off-boundary pixel within `offset` steps along the
/// boundary normal on the closer side, and likewise on the farther side.
pub fn sample_ordering_pairs(
    grid: &PixelGrid,
    partition: &SurfacePartition,
    stride: usize,
    offset: usize,
) -> (OrderingConstraintSet, Vec<Warning>) {
    let stride = stride.max(1);
    let mut set = OrderingConstraintSet::default();
    let mut warnings = Vec::new();
    for curve in grid.curves.iter().filter(|c| c.kind.is_occlusion()) {
        let mut owned = 0usize;
        let mut emitted = 0usize;
        let mut missing = 0usize;
        for &(x, y) in &curve.samples {
            let Some(b) = grid.region_mask.offset_index(x, y) else {
                continue;
            };
            if grid.boundary_id[b] != Some(curve.index as u32) || !partition.is_occlusion(b) {
                continue;
            }
            let take = owned.is_multiple_of(stride);
            owned += 1;
            if !take {
                continue;
            }
            let dir = grid.side_field[b];
            if dir == [0.0, 0.0] {
                missing += 1;
                continue;
            }
            let closer = step_off(partition, grid, (x, y), dir, offset);
            let farther = step_off(partition, grid, (x, y), [-dir[0], -dir[1]], offset);
            match (closer, farther) {
                (Some(p), Some(q)) if partition.continuous_id[p] != partition.continuous_id[q] => {
                    set.pairs.push(OrderingPair {
                        closer: p,
                        farther: q,
                        boundary: curve.index,
                    });
                    emitted += 1;
                }
                (Some(_), Some(_)) => {}
                _ => missing += 1,
            }
        }
        if emitted == 0 && missing > 0 {
            warnings.push(Warning::new(
                "ordering_side_missing",
                format!("boundaries[{}] has no valid pixels on one side; no ordering pairs", curve.index),
            ));
        }
    }
    (set, warnings)
}

fn step_off(
    partition: &SurfacePartition,
    grid: &PixelGrid,
    (x, y): (i64, i64),
    dir: [f64; 2],
    offset: usize,
) -> Option<usize> {
    (1..=offset).find_map(|k| {
        let qx = x + (k as f64 * dir[0]).round() as i64;
        let qy = y + (k as f64 * dir[1]).round() as i64;
        let q = grid.region_mask.offset_index(qx, qy)?;
        (partition.in_region(q) && !partition.is_occlusion(q)).then_some(q)
    })
}
