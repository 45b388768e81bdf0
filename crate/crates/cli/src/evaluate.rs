//! `anno3d evaluate`: score prediction files against annotation-derived ground truth.
//!
//! Ground truth for every manifest item is the reconstruction of its
//! annotation under the run config, optionally overridden by explicit
//! `gt_depth` / `gt_normals` rasters. Rasters are stored as `f32`, so the
//! reconstructed truth is rounded through the same representation before
//! comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anno3d_core::annotation::{parse, AnnotationDocument, CameraIntrinsics};
use anno3d_core::depth::DepthMap;
use anno3d_core::io::{
    boundary_from_raster, decode_raster, depth_from_raster, depth_to_raster, normals_from_raster, normals_to_raster,
    read_file, write_file,
};
use anno3d_core::metrics::{
    boundary_eval, lsiv_rmse, normal_metrics, planar_surface_masks, plane_instance_ap, relation_surfaces,
    relative_normal_auc, reports_to_csv, wkdr, BoundaryConfig, BoundaryPrediction, BoundaryTruth, MetricReport,
    PlanePrediction,
};
use anno3d_core::normals::NormalMap;
use anno3d_core::{reconstruct, Error, Grid, Reconstruction, ReconstructionConfig};
use serde::{Deserialize, Serialize};

use crate::{CliError, MissingInput, Result};

pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const AGGREGATE_ID: &str = "aggregate";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub items: Vec<ManifestItem>,
}

/// Paths are relative to the manifest file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestItem {
    pub id: String,
    pub annotation: PathBuf,
    #[serde(default)]
    pub gt_depth: Option<PathBuf>,
    #[serde(default)]
    pub gt_normals: Option<PathBuf>,
    #[serde(default)]
    pub pred_depth: Option<PathBuf>,
    /// Focal length of the predicted depth at working resolution; defaults
    /// to the annotated focal length.
    #[serde(default)]
    pub pred_focal_px: Option<f64>,
    #[serde(default)]
    pub pred_normals: Option<PathBuf>,
    #[serde(default)]
    pub pred_boundary: Option<PathBuf>,
    #[serde(default)]
    pub pred_planes: Option<PathBuf>,
}

/// `pred_planes` file: instance masks as working-grid pixel indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneFile {
    pub instances: Vec<PlaneInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneInstance {
    pub confidence: f64,
    pub pixels: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub wkdr_pairs: usize,
    pub samples_per_class: usize,
    pub allow_partial: bool,
    pub boundary: BoundaryConfig,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            wkdr_pairs: 1000,
            samples_per_class: 100,
            allow_partial: false,
            boundary: BoundaryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub id: String,
    pub metric: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationOutput {
    pub items: Vec<MetricReport>,
    pub aggregate: MetricReport,
    pub missing: Vec<MissingInput>,
    pub failed: Vec<Skipped>,
    pub skipped: Vec<Skipped>,
}

impl EvaluationOutput {
    /// Per-item rows followed by the aggregate row.
    pub fn csv(&self) -> String {
        let mut all = self.items.clone();
        all.push(self.aggregate.clone());
        reports_to_csv(&all)
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let bad = |message: String| CliError::Manifest {
        path: path.to_path_buf(),
        message,
    };
    let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| bad(e.to_string()))?;
    if manifest.items.is_empty() {
        return Err(bad("no items".into()));
    }
    let mut seen = BTreeSet::new();
    for item in &manifest.items {
        if !seen.insert(item.id.as_str()) {
            return Err(bad(format!("duplicate id `{}`", item.id)));
        }
    }
    Ok(manifest)
}

/// Rewrites every path relative to `base` and drops inputs that do not
/// exist, returning them as a list.
fn resolve(manifest: &Manifest, base: &Path) -> (Vec<ManifestItem>, Vec<MissingInput>) {
    let mut missing = Vec::new();
    let items = manifest
        .items
        .iter()
        .map(|item| {
            let mut item = item.clone();
            let id = item.id.clone();
            let mut fix = |field: &str, slot: &mut Option<PathBuf>| {
                if let Some(p) = slot.take() {
                    let full = base.join(&p);
                    if full.is_file() {
                        *slot = Some(full);
                    } else {
                        missing.push(MissingInput {
                            id: id.clone(),
                            field: field.to_string(),
                            path: full,
                        });
                    }
                }
            };
            let mut annotation = Some(item.annotation.clone());
            fix("annotation", &mut annotation);
            item.annotation = annotation.unwrap_or_default();
            fix("gt_depth", &mut item.gt_depth);
            fix("gt_normals", &mut item.gt_normals);
            fix("pred_depth", &mut item.pred_depth);
            fix("pred_normals", &mut item.pred_normals);
            fix("pred_boundary", &mut item.pred_boundary);
            fix("pred_planes", &mut item.pred_planes);
            item
        })
        .collect();
    (items, missing)
}

/// Evaluates a manifest and writes `metrics.json` and `metrics.csv` into `out`.
pub fn run(
    manifest_path: &Path,
    config: &ReconstructionConfig,
    out: &Path,
    opts: &EvalOptions,
) -> Result<EvaluationOutput> {
    let manifest = load_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let output = evaluate(&manifest, base, config, opts)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_file(
        &out.join(METRICS_JSON),
        &serde_json::to_vec_pretty(&output).expect("metrics serialize"),
    )?;
    write_file(&out.join(METRICS_CSV), output.csv().as_bytes())?;
    Ok(output)
}

pub fn evaluate(
    manifest: &Manifest,
    base: &Path,
    config: &ReconstructionConfig,
    opts: &EvalOptions,
) -> Result<EvaluationOutput> {
    let (items, missing) = resolve(manifest, base);
    if !missing.is_empty() && !opts.allow_partial {
        return Err(CliError::MissingInputs(missing));
    }
    let no_annotation: BTreeSet<&str> = missing
        .iter()
        .filter(|m| m.field == "annotation")
        .map(|m| m.id.as_str())
        .collect();

    let mut reports = Vec::new();
    let mut failed = Vec::new();
    let mut skipped = Vec::new();
    let mut boundary_sets: (Vec<BoundaryPrediction>, Vec<BoundaryTruth>) = (Vec::new(), Vec::new());
    for item in items.iter().filter(|i| !no_annotation.contains(i.id.as_str())) {
        match evaluate_item(item, config, opts, &mut skipped) {
            Ok((report, boundary)) => {
                if let Some((p, t)) = boundary {
                    boundary_sets.0.push(p);
                    boundary_sets.1.push(t);
                }
                reports.push(report);
            }
            Err(e) => failed.push(Skipped {
                id: item.id.clone(),
                metric: "all".into(),
                reason: e.to_string(),
            }),
        }
    }
    if !failed.is_empty() && !opts.allow_partial {
        return Err(CliError::ItemsFailed(
            failed.into_iter().map(|f| (f.id, f.reason)).collect(),
        ));
    }

    let mut aggregate = mean_report(&reports);
    if !boundary_sets.0.is_empty() {
        let eval = boundary_eval(&boundary_sets.0, &boundary_sets.1, &opts.boundary)?;
        aggregate.set("boundary_ods", eval.ods);
        aggregate.set("boundary_ois", eval.ois);
        aggregate.set("boundary_ap", eval.ap);
        aggregate.set("boundary_ods_threshold", eval.ods_threshold);
        aggregate.curves.insert("boundary".into(), eval.curve);
    }
    aggregate.set("num_items", reports.len() as f64);
    Ok(EvaluationOutput {
        items: reports,
        aggregate,
        missing,
        failed,
        skipped,
    })
}

/// Mean of every metric over the reports that define it.
fn mean_report(reports: &[MetricReport]) -> MetricReport {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in reports {
        for (k, v) in &r.values {
            let e = sums.entry(k.as_str()).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    let mut agg = MetricReport::new(AGGREGATE_ID);
    for (k, (s, n)) in sums {
        agg.set(k, s / n as f64);
    }
    agg
}

fn load_raster(path: &Path) -> anno3d_core::Result<anno3d_core::io::Raster> {
    decode_raster(&read_file(path)?)
}

/// Reconstructed truth at stored raster precision.
fn quantized(rec: &Reconstruction) -> anno3d_core::Result<(DepthMap, NormalMap)> {
    let depth = depth_from_raster(&depth_to_raster(&rec.depth))?;
    let normals = normals_from_raster(&normals_to_raster(&rec.normals))?;
    Ok((depth, normals))
}

fn working_intrinsics(rec: &Reconstruction) -> CameraIntrinsics {
    rec.grid.intrinsics
}

type BoundaryPair = (BoundaryPrediction, BoundaryTruth);

fn evaluate_item(
    item: &ManifestItem,
    config: &ReconstructionConfig,
    opts: &EvalOptions,
    skipped: &mut Vec<Skipped>,
) -> anno3d_core::Result<(MetricReport, Option<BoundaryPair>)> {
    let doc: AnnotationDocument = parse(&read_file(&item.annotation)?)?;
    let rec = reconstruct(&doc, config)?;
    let (mut gt_depth, mut gt_normals) = quantized(&rec)?;
    if let Some(p) = &item.gt_depth {
        gt_depth = depth_from_raster(&load_raster(p)?)?;
    }
    if let Some(p) = &item.gt_normals {
        gt_normals = normals_from_raster(&load_raster(p)?)?;
    }
    let mut report = MetricReport::new(&item.id);
    let mut skip = |metric: &str, e: &Error| {
        skipped.push(Skipped {
            id: item.id.clone(),
            metric: metric.into(),
            reason: e.to_string(),
        })
    };

    if let Some(p) = &item.pred_depth {
        let pred = depth_from_raster(&load_raster(p)?)?;
        let gt_intr = working_intrinsics(&rec);
        let pred_intr = CameraIntrinsics {
            focal_px: item.pred_focal_px.unwrap_or(gt_intr.focal_px),
            ..gt_intr
        };
        report.set(
            "lsiv_rmse",
            lsiv_rmse(&pred, &pred_intr, &gt_depth, &gt_intr, &rec.partition.continuous_id)?,
        );
        report.set("wkdr_percent", wkdr(&pred, &gt_depth, opts.wkdr_pairs, config.seed)?.percent);
    }

    if let Some(p) = &item.pred_normals {
        let pred = normals_from_raster(&load_raster(p)?)?;
        let mask = Grid::from_fn(gt_normals.width(), gt_normals.height(), |x, y| {
            *gt_normals.valid.get(x, y) && pred.valid.get_signed(x as i64, y as i64).copied().unwrap_or(false)
        });
        let stats = normal_metrics(&pred.normals, &gt_normals.normals, &mask)?;
        report.set("normal_mean_deg", stats.mean_deg);
        report.set("normal_median_deg", stats.median_deg);
        report.set("normal_within_11_25", stats.within_11_25);
        report.set("normal_within_22_5", stats.within_22_5);
        report.set("normal_within_30", stats.within_30);
        if doc.relations.is_empty() {
            skip("relative_normal_auc", &Error::InsufficientData("no relations annotated".into()));
        } else {
            let relations = relation_surfaces(&doc, &rec.partition)?;
            match relative_normal_auc(&pred.normals, &relations, opts.samples_per_class, config.seed) {
                Ok(auc) => {
                    report.set("auc_orthogonal", auc.auc_orthogonal);
                    report.set("auc_parallel", auc.auc_parallel);
                }
                Err(e @ Error::MissingClass(_)) => skip("relative_normal_auc", &e),
                Err(e) => return Err(e),
            }
        }
    }

    let mut boundary = None;
    if let Some(p) = &item.pred_boundary {
        let pred = boundary_from_raster(&load_raster(p)?)?;
        let truth = BoundaryTruth::from_partition(&rec.partition);
        let eval = boundary_eval(std::slice::from_ref(&pred), std::slice::from_ref(&truth), &opts.boundary)?;
        report.set("boundary_ods", eval.ods);
        report.set("boundary_ois", eval.ois);
        report.set("boundary_ap", eval.ap);
        boundary = Some((pred, truth));
    }

    if let Some(p) = &item.pred_planes {
        let file: PlaneFile = serde_json::from_slice(&read_file(p)?)
            .map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
        let (w, h) = rec.partition.continuous_id.dims();
        let mut preds = Vec::with_capacity(file.instances.len());
        for inst in &file.instances {
            let mut mask = Grid::new(w, h, false);
            for &i in &inst.pixels {
                if i >= w * h {
                    return Err(Error::InvalidArgument(format!(
                        "plane pixel {i} outside the {w}x{h} working grid"
                    )));
                }
                mask[i] = true;
            }
            preds.push(PlanePrediction {
                mask,
                confidence: inst.confidence,
            });
        }
        let gts = planar_surface_masks(&doc, &rec.partition)?;
        if gts.is_empty() {
            skip("plane_ap", &Error::InsufficientData("no planar surfaces annotated".into()));
        } else {
            let ap = plane_instance_ap(&preds, &gts)?;
            report.set("plane_ap", ap.ap);
            report.set("plane_ap50", ap.ap50);
            report.set("plane_ap75", ap.ap75);
        }
    }
    Ok((report, boundary))
}

/// Plane instances of the annotated planar surfaces, confidence 1.
pub fn planes_from_reconstruction(doc: &AnnotationDocument, rec: &Reconstruction) -> anno3d_core::Result<PlaneFile> {
    let instances = planar_surface_masks(doc, &rec.partition)?
        .into_iter()
        .map(|m| PlaneInstance {
            confidence: 1.0,
            pixels: (0..m.len()).filter(|&i| m[i]).collect(),
        })
        .collect();
    Ok(PlaneFile { instances })
}
