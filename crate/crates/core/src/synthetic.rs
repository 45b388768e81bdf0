//! Small hand-built annotation documents for demos, tests and the bundled corpus.

use nalgebra::Vector3;

use crate::annotation::{
    AnnotationDocument, BoundaryCurve, BoundaryKind, CameraIntrinsics, NormalSample, PlanarityFlag, Point2,
    RelationKind, RelativeNormalRelation, Side,
};

/// Empty document whose region is the whole `width x height` image.
pub fn rect(image_id: &str, width: u32, height: u32, focal_px: f64) -> AnnotationDocument {
    AnnotationDocument::new(
        image_id,
        CameraIntrinsics {
            focal_px,
            width,
            height,
        },
    )
}

pub fn curve(kind: BoundaryKind, points: &[Point2], closer_side: Option<Side>) -> BoundaryCurve {
    BoundaryCurve {
        kind,
        points: points.to_vec(),
        closer_side,
    }
}

pub fn occlusion(points: &[Point2], closer_side: Side) -> BoundaryCurve {
    curve(BoundaryKind::OcclusionSharp, points, Some(closer_side))
}

pub fn smooth_occlusion(points: &[Point2], closer_side: Side) -> BoundaryCurve {
    curve(BoundaryKind::OcclusionSmooth, points, Some(closer_side))
}

pub fn fold(points: &[Point2]) -> BoundaryCurve {
    curve(BoundaryKind::Fold, points, None)
}

/// Normal sample; `n` is normalized here.
pub fn normal(x: f64, y: f64, n: [f64; 3]) -> NormalSample {
    let v = Vector3::from(n).normalize();
    NormalSample {
        x,
        y,
        nx: v.x,
        ny: v.y,
        nz: v.z,
    }
}

pub fn planar(x: f64, y: f64, is_planar: bool) -> PlanarityFlag {
    PlanarityFlag { x, y, is_planar }
}

pub fn relation(a: Point2, b: Point2, relation: RelationKind) -> RelativeNormalRelation {
    RelativeNormalRelation { a, b, relation }
}

/// Ten documents exercising every annotation element; used as the bundled
/// corpus and for determinism checks.
pub fn corpus() -> Vec<AnnotationDocument> {
    let mut docs = Vec::new();

    let mut d = rect("frontal_plane", 160, 120, 200.0);
    d.normals.push(normal(80.0, 60.0, [0.0, 0.0, 1.0]));
    d.planarity.push(planar(80.0, 60.0, true));
    docs.push(d);

    let mut d = rect("slanted_plane", 160, 120, 180.0);
    d.normals.push(normal(80.0, 60.0, [0.4, -0.2, 1.0]));
    d.planarity.push(planar(80.0, 60.0, true));
    docs.push(d);

    let mut d = rect("open_book_fold", 200, 150, 220.0);
    d.boundaries.push(fold(&[[100.0, 0.0], [100.0, 150.0]]));
    d.normals.push(normal(50.0, 75.0, [-0.6, 0.0, 0.8]));
    d.normals.push(normal(150.0, 75.0, [0.6, 0.0, 0.8]));
    d.planarity.push(planar(50.0, 75.0, true));
    d.planarity.push(planar(150.0, 75.0, true));
    docs.push(d);

    let mut d = rect("box_over_floor", 200, 160, 240.0);
    d.boundaries.push(occlusion(&[[0.0, 80.0], [200.0, 80.0]], Side::Left));
    d.normals.push(normal(100.0, 40.0, [0.0, 0.0, 1.0]));
    d.normals.push(normal(100.0, 120.0, [0.0, -0.7, 0.7]));
    d.planarity.push(planar(100.0, 40.0, true));
    d.planarity.push(planar(100.0, 120.0, true));
    docs.push(d);

    let mut d = rect("cylinder_edge", 160, 160, 200.0);
    d.boundaries.push(smooth_occlusion(&[[90.0, 0.0], [90.0, 160.0]], Side::Right));
    d.normals.push(normal(30.0, 80.0, [0.0, 0.0, 1.0]));
    d.normals.push(normal(130.0, 80.0, [0.0, 0.0, 1.0]));
    d.planarity.push(planar(30.0, 80.0, false));
    d.planarity.push(planar(130.0, 80.0, true));
    docs.push(d);

    let mut d = rect("room_corner", 240, 180, 200.0);
    d.boundaries.push(fold(&[[120.0, 0.0], [120.0, 120.0]]));
    d.boundaries.push(fold(&[[0.0, 120.0], [240.0, 120.0]]));
    d.normals.push(normal(60.0, 60.0, [0.7, 0.0, 0.7]));
    d.normals.push(normal(180.0, 60.0, [-0.7, 0.0, 0.7]));
    d.normals.push(normal(120.0, 150.0, [0.0, -0.8, 0.6]));
    for p in [[60.0, 60.0], [180.0, 60.0], [120.0, 150.0]] {
        d.planarity.push(planar(p[0], p[1], true));
    }
    d.relations
        .push(relation([60.0, 60.0], [180.0, 60.0], RelationKind::Orthogonal));
    d.relations
        .push(relation([60.0, 60.0], [120.0, 150.0], RelationKind::Orthogonal));
    docs.push(d);

    let mut d = rect("parallel_shelves", 180, 180, 300.0);
    d.boundaries.push(occlusion(&[[0.0, 60.0], [180.0, 60.0]], Side::Right));
    d.boundaries.push(occlusion(&[[0.0, 120.0], [180.0, 120.0]], Side::Right));
    d.normals.push(normal(90.0, 30.0, [0.1, -0.3, 1.0]));
    d.normals.push(normal(90.0, 90.0, [0.0, -0.25, 1.0]));
    d.normals.push(normal(90.0, 150.0, [0.2, -0.1, 1.0]));
    for y in [30.0, 90.0, 150.0] {
        d.planarity.push(planar(90.0, y, true));
    }
    d.relations
        .push(relation([90.0, 30.0], [90.0, 150.0], RelationKind::Parallel));
    d.relations
        .push(relation([90.0, 30.0], [90.0, 90.0], RelationKind::Neither));
    docs.push(d);

    let mut d = rect("l_shaped_region", 200, 200, 250.0);
    d.region.vertices = vec![
        [20.0, 20.0],
        [120.0, 20.0],
        [120.0, 100.0],
        [180.0, 100.0],
        [180.0, 180.0],
        [20.0, 180.0],
    ];
    d.normals.push(normal(60.0, 60.0, [0.0, 0.3, 1.0]));
    d.normals.push(normal(150.0, 150.0, [-0.3, 0.0, 1.0]));
    d.planarity.push(planar(60.0, 60.0, false));
    docs.push(d);

    let mut d = rect("dangling_cut", 160, 120, 160.0);
    d.boundaries.push(occlusion(&[[0.0, 60.0], [100.0, 60.0]], Side::Left));
    d.normals.push(normal(50.0, 30.0, [0.0, 0.0, 1.0]));
    d.normals.push(normal(50.0, 90.0, [0.3, 0.0, 1.0]));
    docs.push(d);

    let mut d = rect("curved_diagonal", 200, 150, 400.0);
    d.boundaries.push(smooth_occlusion(
        &[[0.0, 20.0], [60.0, 50.0], [120.0, 70.0], [200.0, 80.0]],
        Side::Right,
    ));
    d.boundaries.push(fold(&[[150.0, 75.0], [150.0, 150.0]]));
    d.normals.push(normal(40.0, 120.0, [-0.2, -0.2, 1.0]));
    d.normals.push(normal(180.0, 130.0, [0.5, 0.0, 1.0]));
    d.normals.push(normal(100.0, 10.0, [0.0, 0.0, 1.0]));
    d.planarity.push(planar(40.0, 120.0, false));
    d.planarity.push(planar(180.0, 130.0, true));
    docs.push(d);

    docs
}
