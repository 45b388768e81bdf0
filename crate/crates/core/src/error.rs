use std::path::PathBuf;

use thiserror::Error;

use crate::annotation::{ParseError, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("validation_failed: {}", describe_violations(.0))]
    Invalid(ValidationReport),

    #[error("region_too_small: polygon covers {area:.2} px at working resolution")]
    RegionTooSmall { area: f64 },

    #[error("anchor_outside: ({x}, {y}) is not inside the region")]
    AnchorOutside { x: f64, y: f64 },

    #[error("anchor_on_boundary: ({x}, {y}) lies on a boundary pixel")]
    AnchorOnBoundary { x: f64, y: f64 },

    #[error("relation_conflict: {}", describe_cycle(.cycle))]
    RelationConflict { cycle: Vec<usize> },

    #[error("sparse solve failed: {0}")]
    Solver(String),

    #[error("shape_mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("degenerate_ground_truth: {0}")]
    DegenerateGroundTruth(String),

    #[error("insufficient_data: {0}")]
    InsufficientData(String),

    #[error("missing_class: {0:?}")]
    MissingClass(Vec<String>),

    #[error("gt_not_partition: ground-truth masks {0} and {1} overlap")]
    GtNotPartition(usize, usize),

    #[error("invalid_argument: {0}")]
    InvalidArgument(String),

    #[error("format: {0}")]
    Format(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    /// Stable machine-readable code, used by the CLI report and the service.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse_error",
            Error::Invalid(_) => "validation_failed",
            Error::RegionTooSmall { .. } => "region_too_small",
            Error::AnchorOutside { .. } => "anchor_outside",
            Error::AnchorOnBoundary { .. } => "anchor_on_boundary",
            Error::RelationConflict { .. } => "relation_conflict",
            Error::Solver(_) => "solver_failure",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::DegenerateGroundTruth(_) => "degenerate_ground_truth",
            Error::InsufficientData(_) => "insufficient_data",
            Error::MissingClass(_) => "missing_class",
            Error::GtNotPartition(..) => "gt_not_partition",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Format(_) => "format",
            Error::Io { .. } => "io",
            Error::Image(_) => "image",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn describe_cycle(cycle: &[usize]) -> String {
    let parts: Vec<String> = cycle.iter().map(|r| format!("relations[{r}]")).collect();
    parts.join(" -> ")
}

fn describe_violations(report: &ValidationReport) -> String {
    let codes: Vec<&str> = report.violations.iter().map(|v| v.code.as_str()).collect();
    codes.join(", ")
}
