//! `anno3d reconstruct`: documents in, rasters, meshes and run reports out.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anno3d_core::annotation::parse;
use anno3d_core::io::{
    adjacency_summary, boundary_to_raster, depth_to_raster, encode_glb, encode_ply, encode_raster, normals_to_raster, write_depth_png16,
    write_file, write_id_map_png, write_normal_png,
};
use anno3d_core::metrics::BoundaryTruth;
use anno3d_core::{reconstruct, AnnotationDocument, Reconstruction, ReconstructionConfig};
use serde::Serialize;

use crate::evaluate::planes_from_reconstruction;
use crate::{CliError, Result};

pub const NORMALS_FILE: &str = "normals.nmap";
pub const DEPTH_FILE: &str = "depth.dmap";
pub const MESH_PLY_FILE: &str = "mesh.ply";
pub const MESH_GLB_FILE: &str = "mesh.glb";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Default)]
pub struct ArtifactOptions {
    /// Also write 16-bit depth and RGB normal PNGs.
    pub png: bool,
    /// Also write surface id maps, an adjacency summary, and the annotated
    /// boundaries and planes in the prediction formats read by `evaluate`.
    pub debug_dump: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocumentOutcome {
    pub source: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub config: ReconstructionConfig,
    pub documents: Vec<DocumentOutcome>,
}

impl BatchSummary {
    pub fn failed(&self) -> usize {
        self.documents.iter().filter(|d| !d.ok).count()
    }
}

/// Directory-safe form of an image id.
pub fn artifact_dir_name(image_id: &str) -> String {
    let s: String = image_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    if s.is_empty() || s.chars().all(|c| c == '.') {
        "_".into()
    } else {
        s
    }
}

/// Writes the five standard artifacts (plus optional extras) for one
/// reconstruction into `dir` and returns the written paths.
pub fn write_artifacts(
    doc: &AnnotationDocument,
    rec: &Reconstruction,
    dir: &Path,
    opts: &ArtifactOptions,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let p = dir.join(name);
        write_file(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    put(NORMALS_FILE, &encode_raster(&normals_to_raster(&rec.normals)))?;
    put(DEPTH_FILE, &encode_raster(&depth_to_raster(&rec.depth)))?;
    put(MESH_PLY_FILE, &encode_ply(&rec.mesh, true))?;
    put(MESH_GLB_FILE, &encode_glb(&rec.mesh))?;
    put(REPORT_FILE, &serde_json::to_vec_pretty(&rec.report).expect("report serializes"))?;
    if opts.png {
        let p = dir.join("depth.png");
        write_depth_png16(&p, &rec.depth)?;
        written.push(p);
        written.push(dir.join("depth.png.json"));
        let p = dir.join("normals.png");
        write_normal_png(&p, &rec.normals)?;
        written.push(p);
    }
    if opts.debug_dump {
        let p = dir.join("continuous_ids.png");
        write_id_map_png(&p, &rec.partition.continuous_id)?;
        written.push(p);
        let p = dir.join("smooth_ids.png");
        write_id_map_png(&p, &rec.partition.smooth_id)?;
        written.push(p);
        let summary = adjacency_summary(&rec.partition);
        let p = dir.join("adjacency.json");
        write_file(&p, &serde_json::to_vec_pretty(&summary).expect("summary serializes"))?;
        written.push(p);
        let truth = BoundaryTruth::from_partition(&rec.partition).as_prediction();
        let p = dir.join("boundary.bmap");
        write_file(&p, &encode_raster(&boundary_to_raster(&truth)))?;
        written.push(p);
        let planes = planes_from_reconstruction(doc, rec)?;
        let p = dir.join("planes.json");
        write_file(&p, &serde_json::to_vec(&planes).expect("planes serialize"))?;
        written.push(p);
    }
    Ok(written)
}

/// Reconstructs every document independently; a failing document is
/// recorded and the batch continues. Writes `summary.json` into `out`.
pub fn run(paths: &[PathBuf], config: &ReconstructionConfig, out: &Path, opts: &ArtifactOptions) -> Result<BatchSummary> {
    if paths.is_empty() {
        return Err(CliError::NoDocuments);
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut used = BTreeSet::new();
    let mut documents = Vec::with_capacity(paths.len());
    for path in paths {
        let outcome = match process(path, config, out, opts, &mut used) {
            Ok((id, artifacts)) => DocumentOutcome {
                source: path.clone(),
                image_id: Some(id),
                ok: true,
                error_code: None,
                error: None,
                artifacts,
            },
            Err((id, code, message)) => DocumentOutcome {
                source: path.clone(),
                image_id: id,
                ok: false,
                error_code: Some(code),
                error: Some(message),
                artifacts: Vec::new(),
            },
        };
        documents.push(outcome);
    }
    let summary = BatchSummary {
        config: config.clone(),
        documents,
    };
    let p = out.join(SUMMARY_FILE);
    write_file(&p, &serde_json::to_vec_pretty(&summary).expect("summary serializes"))?;
    Ok(summary)
}

type Failure = (Option<String>, String, String);

fn process(
    path: &Path,
    config: &ReconstructionConfig,
    out: &Path,
    opts: &ArtifactOptions,
    used: &mut BTreeSet<String>,
) -> std::result::Result<(String, Vec<PathBuf>), Failure> {
    let bytes = std::fs::read(path).map_err(|e| (None, "io".to_string(), format!("{}: {e}", path.display())))?;
    let doc = parse(&bytes).map_err(|e| (None, e.code.clone(), e.to_string()))?;
    let id = doc.image_id.clone();
    let fail = |code: &str, msg: String| (Some(id.clone()), code.to_string(), msg);
    let dir_name = artifact_dir_name(&id);
    if !used.insert(dir_name.clone()) {
        return Err(fail("duplicate_id", format!("image id `{id}` appears more than once in this batch")));
    }
    let rec = reconstruct(&doc, config).map_err(|e| fail(e.code(), e.to_string()))?;
    let artifacts = write_artifacts(&doc, &rec, &out.join(dir_name), opts).map_err(|e| fail("io", e.to_string()))?;
    Ok((id, artifacts))
}
