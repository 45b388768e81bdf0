use std::collections::BTreeSet;
use std::path::Path;

use image::{ImageBuffer, Rgb};
use serde::Serialize;

use crate::grid::Grid;
use crate::partition::SurfacePartition;
use crate::Result;

/// Color-coded surface ids; pixels without an id are black.
pub fn write_id_map_png(path: &Path, ids: &Grid<Option<u32>>) -> Result<()> {
    let img = ImageBuffer::from_fn(ids.width() as u32, ids.height() as u32, |x, y| match ids.get(x as usize, y as usize) {
        Some(id) => {
            let h = (id.wrapping_add(1)).wrapping_mul(0x9E37_79B9);
            Rgb([(h >> 24) as u8 | 0x40, (h >> 16) as u8 | 0x40, (h >> 8) as u8 | 0x40])
        }
        None => Rgb([0, 0, 0]),
    });
    img.save(path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceSummary {
    pub id: u32,
    pub pixels: usize,
    /// Surfaces sharing a 4-neighbor edge with this one.
    pub neighbors: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuous: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjacencySummary {
    pub width: usize,
    pub height: usize,
    pub occlusion_pixels: usize,
    pub fold_pixels: usize,
    pub continuous: Vec<SurfaceSummary>,
    pub smooth: Vec<SurfaceSummary>,
}

pub fn adjacency_summary(partition: &SurfacePartition) -> AdjacencySummary {
    let summarize = |ids: &Grid<Option<u32>>, count: usize, parent: Option<&[u32]>| {
        let mut pixels = vec![0usize; count];
        let mut neighbors = vec![BTreeSet::new(); count];
        for p in 0..ids.len() {
            let Some(a) = ids[p] else { continue };
            pixels[a as usize] += 1;
            for (q, _) in ids.neighbors4(p) {
                if let Some(b) = ids[q] {
                    if b != a {
                        neighbors[a as usize].insert(b);
                    }
                }
            }
        }
        (0..count)
            .map(|i| SurfaceSummary {
                id: i as u32,
                pixels: pixels[i],
                neighbors: neighbors[i].iter().copied().collect(),
                continuous: parent.map(|p| p[i]),
            })
            .collect()
    };
    let n = partition.continuous_id.len();
    AdjacencySummary {
        width: partition.width(),
        height: partition.height(),
        occlusion_pixels: (0..n).filter(|&p| partition.is_occlusion(p)).count(),
        fold_pixels: (0..n).filter(|&p| partition.is_fold(p)).count(),
        continuous: summarize(&partition.continuous_id, partition.num_continuous, None),
        smooth: summarize(&partition.smooth_id, partition.num_smooth, Some(&partition.smooth_parent)),
    }
}
