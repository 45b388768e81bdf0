use serde::Serialize;

use crate::annotation::{AnnotationDocument, BoundaryKind, CameraIntrinsics, Point2, Side};
use crate::geom::{point_in_polygon, polygon_area};
use crate::grid::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryLabel {
    None,
    OcclusionSharp,
    OcclusionSmooth,
    Fold,
}

impl BoundaryLabel {
    pub fn is_occlusion(self) -> bool {
        matches!(self, BoundaryLabel::OcclusionSharp | BoundaryLabel::OcclusionSmooth)
    }

    pub fn is_fold(self) -> bool {
        self == BoundaryLabel::Fold
    }

    pub fn is_boundary(self) -> bool {
        self != BoundaryLabel::None
    }
}

impl From<BoundaryKind> for BoundaryLabel {
    fn from(kind: BoundaryKind) -> Self {
        match kind {
            BoundaryKind::OcclusionSharp => BoundaryLabel::OcclusionSharp,
            BoundaryKind::OcclusionSmooth => BoundaryLabel::OcclusionSmooth,
            BoundaryKind::Fold => BoundaryLabel::Fold,
        }
    }
}

/// One boundary polyline after scan conversion.
#[derive(Debug, Clone)]
pub struct RasterCurve {
    /// Index into `AnnotationDocument::boundaries`.
    pub index: usize,
    pub kind: BoundaryKind,
    pub closer_side: Option<Side>,
    /// Ordered 8-connected pixel path (not clipped to the region).
    pub samples: Vec<(i64, i64)>,
    /// Unit tangent per sample (central difference over +-2 samples); zero if degenerate.
    pub tangents: Vec<[f64; 2]>,
}

impl RasterCurve {
    /// Unit vector pointing to the closer side (occlusions) or the attached
    /// side (folds: always the left of the drawing direction).
    pub fn side_direction(&self, sample: usize) -> [f64; 2] {
        let [tx, ty] = self.tangents[sample];
        // left of travel in y-down screen space
        let left = [ty, -tx];
        match (self.kind, self.closer_side) {
            (BoundaryKind::Fold, _) => left,
            (_, Some(Side::Right)) => [-left[0], -left[1]],
            _ => left,
        }
    }
}

/// A pixel drawn twice by the same curve with opposing closer sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideConflict {
    pub curve: usize,
    pub x: usize,
    pub y: usize,
}

/// Rasterized document at working resolution.
#[derive(Debug, Clone)]
pub struct PixelGrid {
    /// Annotation pixels -> working pixels.
    pub scale: f64,
    /// Intrinsics of the working raster (focal scaled, principal point at its center).
    pub intrinsics: CameraIntrinsics,
    pub region_mask: Grid<bool>,
    pub boundary_label: Grid<BoundaryLabel>,
    pub boundary_id: Grid<Option<u32>>,
    /// Sample index within the owning curve, for boundary pixels.
    pub boundary_sample: Grid<u32>,
    /// Closer side (occlusion) or attached side (fold) per boundary pixel; zero elsewhere.
    pub side_field: Grid<[f64; 2]>,
    pub curves: Vec<RasterCurve>,
    pub conflicts: Vec<SideConflict>,
}

impl PixelGrid {
    pub fn width(&self) -> usize {
        self.region_mask.width()
    }

    pub fn height(&self) -> usize {
        self.region_mask.height()
    }

    /// Working-grid pixel containing an annotation-space point.
    pub fn pixel_of(&self, p: Point2) -> Option<(usize, usize)> {
        let x = (p[0] * self.scale).floor();
        let y = (p[1] * self.scale).floor();
        if x < 0.0 || y < 0.0 || x >= self.width() as f64 || y >= self.height() as f64 {
            return None;
        }
        Some((x as usize, y as usize))
    }

    pub fn region_pixel_count(&self) -> usize {
        self.region_mask.as_slice().iter().filter(|&&m| m).count()
    }
}

/// Scale that maps an image to at most `working_resolution` pixels on its longer side.
pub fn working_scale(intrinsics: &CameraIntrinsics, working_resolution: u32) -> f64 {
    let longest = intrinsics.width.max(intrinsics.height).max(1) as f64;
    (working_resolution as f64 / longest).min(1.0)
}

pub fn rasterize(doc: &AnnotationDocument, scale: f64) -> Result<PixelGrid> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let width = ((doc.intrinsics.width as f64 * scale).round() as usize).max(1);
    let height = ((doc.intrinsics.height as f64 * scale).round() as usize).max(1);
    let intrinsics = CameraIntrinsics {
        focal_px: doc.intrinsics.focal_px * scale,
        width: width as u32,
        height: height as u32,
    };

    let polygon: Vec<Point2> = doc
        .region
        .vertices
        .iter()
        .map(|v| [v[0] * scale, v[1] * scale])
        .collect();
    let area = polygon_area(&polygon);
    if area < 4.0 {
        return Err(Error::RegionTooSmall { area });
    }
    let region_mask = Grid::from_fn(width, height, |x, y| {
        point_in_polygon([x as f64 + 0.5, y as f64 + 0.5], &polygon)
    });
    if !region_mask.as_slice().iter().any(|&m| m) {
        return Err(Error::RegionTooSmall { area });
    }

    let mut grid = PixelGrid {
        scale,
        intrinsics,
        boundary_label: Grid::new(width, height, BoundaryLabel::None),
        boundary_id: Grid::new(width, height, None),
        boundary_sample: Grid::new(width, height, 0),
        side_field: Grid::new(width, height, [0.0, 0.0]),
        region_mask,
        curves: Vec::with_capacity(doc.boundaries.len()),
        conflicts: Vec::new(),
    };

    for (index, curve) in doc.boundaries.iter().enumerate() {
        let pixels: Vec<(i64, i64)> = curve
            .points
            .iter()
            .map(|p| {
                let x = ((p[0] * scale).floor() as i64).clamp(0, width as i64 - 1);
                let y = ((p[1] * scale).floor() as i64).clamp(0, height as i64 - 1);
                (x, y)
            })
            .collect();
        let samples = trace_polyline(&pixels);
        let tangents = central_tangents(&samples);
        let raster = RasterCurve {
            index,
            kind: curve.kind,
            closer_side: curve.closer_side,
            samples,
            tangents,
        };
        draw_curve(&mut grid, &raster);
        grid.curves.push(raster);
    }
    Ok(grid)
}

fn draw_curve(grid: &mut PixelGrid, curve: &RasterCurve) {
    let label = BoundaryLabel::from(curve.kind);
    for (k, &(x, y)) in curve.samples.iter().enumerate() {
        let Some(i) = grid.region_mask.offset_index(x, y) else {
            continue;
        };
        if !grid.region_mask[i] {
            continue;
        }
        let existing = grid.boundary_label[i];
        // occlusion beats fold; otherwise the later curve wins
        if existing.is_occlusion() && label.is_fold() {
            continue;
        }
        let dir = curve.side_direction(k);
        if grid.boundary_id[i] == Some(curve.index as u32) && label.is_occlusion() {
            let prev = grid.side_field[i];
            if prev[0] * dir[0] + prev[1] * dir[1] < 0.0 {
                grid.conflicts.push(SideConflict {
                    curve: curve.index,
                    x: x as usize,
                    y: y as usize,
                });
            }
        }
        grid.boundary_label[i] = label;
        grid.boundary_id[i] = Some(curve.index as u32);
        grid.boundary_sample[i] = k as u32;
        grid.side_field[i] = dir;
    }
}

/// Bresenham through consecutive vertices, dropping repeats and redundant
/// L-corner pixels so the path stays 8-connected and one pixel wide.
pub(crate) fn trace_polyline(vertices: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut out: Vec<(i64, i64)> = Vec::new();
    let push = |p: (i64, i64), out: &mut Vec<(i64, i64)>| {
        if out.last() == Some(&p) {
            return;
        }
        out.push(p);
        while out.len() >= 3 {
            let n = out.len();
            let (a, c) = (out[n - 3], out[n - 1]);
            if (a.0 - c.0).abs().max((a.1 - c.1).abs()) == 1 {
                out.remove(n - 2);
            } else {
                break;
            }
        }
    };
    if vertices.len() == 1 {
        push(vertices[0], &mut out);
    }
    for pair in vertices.windows(2) {
        for p in bresenham(pair[0], pair[1]) {
            push(p, &mut out);
        }
    }
    out
}

fn bresenham(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push((x, y));
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

fn central_tangents(samples: &[(i64, i64)]) -> Vec<[f64; 2]> {
    let n = samples.len();
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(2);
            let hi = (k + 2).min(n.saturating_sub(1));
            let tx = (samples[hi].0 - samples[lo].0) as f64;
            let ty = (samples[hi].1 - samples[lo].1) as f64;
            let len = tx.hypot(ty);
            if len == 0.0 {
                [0.0, 0.0]
            } else {
                [tx / len, ty / len]
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{BoundaryCurve, CameraIntrinsics};

    fn square_doc(w: u32, h: u32, poly: Vec<Point2>) -> AnnotationDocument {
        let mut doc = AnnotationDocument::new(
            "t",
            CameraIntrinsics {
                focal_px: 50.0,
                width: w,
                height: h,
            },
        );
        doc.region.vertices = poly;
        doc
    }

    #[test]
    fn square_fill_matches_brute_force() {
        let poly = vec![[3.0, 4.0], [13.0, 4.0], [13.0, 14.0], [3.0, 14.0]];
        let doc = square_doc(20, 20, poly.clone());
        let grid = rasterize(&doc, 1.0).unwrap();
        assert_eq!(grid.region_pixel_count(), 100);
        // independent oracle: half-open pixel-center inclusion for an axis-aligned box
        for y in 0..20 {
            for x in 0..20 {
                let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                let inside = (3.0..13.0).contains(&cx) && (4.0..14.0).contains(&cy);
                assert_eq!(*grid.region_mask.get(x, y), inside, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn no_boundaries_means_no_labels() {
        let doc = square_doc(8, 8, vec![[0.0, 0.0], [8.0, 0.0], [8.0, 8.0], [0.0, 8.0]]);
        let grid = rasterize(&doc, 1.0).unwrap();
        assert!(grid.boundary_label.as_slice().iter().all(|l| *l == BoundaryLabel::None));
    }

    #[test]
    fn horizontal_left_closer_is_upper_row() {
        let mut doc = square_doc(10, 10, vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]);
        doc.boundaries.push(BoundaryCurve {
            kind: BoundaryKind::OcclusionSharp,
            points: vec![[0.5, 5.5], [9.5, 5.5]],
            closer_side: Some(Side::Left),
        });
        let grid = rasterize(&doc, 1.0).unwrap();
        for x in 0..10 {
            assert!(grid.boundary_label.get(x, 5).is_occlusion());
            assert_eq!(*grid.side_field.get(x, 5), [0.0, -1.0]);
        }
    }

    #[test]
    fn tiny_region_rejected() {
        let doc = square_doc(10, 10, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        assert!(matches!(rasterize(&doc, 1.0), Err(Error::RegionTooSmall { .. })));
    }

    #[test]
    fn traced_diagonal_is_thin_and_8_connected() {
        let path = trace_polyline(&[(0, 0), (3, 1), (6, 6), (6, 0)]);
        for w in path.windows(2) {
            let d = (w[0].0 - w[1].0).abs().max((w[0].1 - w[1].1).abs());
            assert_eq!(d, 1);
        }
        for w in path.windows(3) {
            let d = (w[0].0 - w[2].0).abs().max((w[0].1 - w[2].1).abs());
            assert!(d >= 2, "redundant corner in {w:?}");
        }
    }
}
