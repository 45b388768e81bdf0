//! The annotation document: one image region with its drawn boundaries,
//! sparse normals, planarity flags and pairwise normal relations.
//!
//! Coordinates are subpixel image positions (x right, y down). Normals live
//! in the image-aligned camera frame: x right, y down, z toward the viewer,
//! so a surface facing the camera has `nz > 0`.

mod schema;
pub(crate) mod validate;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use schema::{parse, serialize, ParseError, SCHEMA_VERSION};
pub use validate::{validate, validate_with_resolution, ValidationReport, Violation};

pub type Point2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub focal_px: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    /// Centered coordinates relative to the principal point (image center).
    pub fn centered(&self, x: f64, y: f64) -> (f64, f64) {
        (x - self.width as f64 / 2.0, y - self.height as f64 / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionPolygon {
    pub vertices: Vec<Point2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    OcclusionSharp,
    OcclusionSmooth,
    Fold,
}

impl BoundaryKind {
    pub fn is_occlusion(self) -> bool {
        matches!(self, BoundaryKind::OcclusionSharp | BoundaryKind::OcclusionSmooth)
    }
}

/// Side of a polyline relative to its drawing direction, in screen space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryCurve {
    pub kind: BoundaryKind,
    pub points: Vec<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closer_side: Option<Side>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalSample {
    pub x: f64,
    pub y: f64,
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl NormalSample {
    pub fn position(&self) -> Point2 {
        [self.x, self.y]
    }

    pub fn normal(&self) -> Vector3<f64> {
        Vector3::new(self.nx, self.ny, self.nz)
    }

    pub fn with_normal(mut self, n: Vector3<f64>) -> Self {
        self.nx = n.x;
        self.ny = n.y;
        self.nz = n.z;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarityFlag {
    pub x: f64,
    pub y: f64,
    pub is_planar: bool,
}

impl PlanarityFlag {
    pub fn anchor(&self) -> Point2 {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Neither,
    Parallel,
    Orthogonal,
}

impl RelationKind {
    pub const ALL: [RelationKind; 3] = [
        RelationKind::Parallel,
        RelationKind::Orthogonal,
        RelationKind::Neither,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationKind::Neither => "neither",
            RelationKind::Parallel => "parallel",
            RelationKind::Orthogonal => "orthogonal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativeNormalRelation {
    pub a: Point2,
    pub b: Point2,
    pub relation: RelationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationDocument {
    pub schema_version: u32,
    pub image_id: String,
    pub intrinsics: CameraIntrinsics,
    pub region: RegionPolygon,
    #[serde(default)]
    pub boundaries: Vec<BoundaryCurve>,
    #[serde(default)]
    pub normals: Vec<NormalSample>,
    #[serde(default)]
    pub planarity: Vec<PlanarityFlag>,
    #[serde(default)]
    pub relations: Vec<RelativeNormalRelation>,
}

impl AnnotationDocument {
    /// An empty document over an axis-aligned rectangle covering the image.
    pub fn new(image_id: impl Into<String>, intrinsics: CameraIntrinsics) -> Self {
        let (w, h) = (intrinsics.width as f64, intrinsics.height as f64);
        Self {
            schema_version: SCHEMA_VERSION,
            image_id: image_id.into(),
            intrinsics,
            region: RegionPolygon {
                vertices: vec![[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]],
            },
            boundaries: Vec::new(),
            normals: Vec::new(),
            planarity: Vec::new(),
            relations: Vec::new(),
        }
    }
}
