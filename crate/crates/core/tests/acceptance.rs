//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line with the
//! measured values; the test fails if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use anno3d_core::annotation::{self, validate};
use anno3d_core::depth::{integrate_surface, snap_normal, solve_ordering_lp, OrderingTerm};
use anno3d_core::io::{depth_to_raster, encode_ply, encode_raster, normals_to_raster};
use anno3d_core::metrics::*;
use anno3d_core::normals::{annotated_constraints, solve_dense_normals, Normal, NormalConstraintSet, NormalMap};
use anno3d_core::partition::{partition, rasterize};
use anno3d_core::sparse::SolverBackend;
use anno3d_core::synthetic::{fold, normal, rect};
use anno3d_core::{reconstruct, Grid, LpMode, ReconstructionConfig};
use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn constraints(doc: &anno3d_core::AnnotationDocument, part: &anno3d_core::partition::SurfacePartition) -> NormalConstraintSet {
    let mut set = NormalConstraintSet::new();
    set.extend(annotated_constraints(doc, part).0);
    set
}

fn solver_constancy() -> Outcome {
    let n = Normal::new(0.3, -0.2, 0.9).normalize();
    let mut doc = rect("const", 128, 128, 100.0);
    doc.normals.push(normal(40.5, 70.5, [n.x, n.y, n.z]));
    let part = partition_of(&doc);
    let cons = constraints(&doc, &part);
    let t = Instant::now();
    let dense = solve_dense_normals(&part, &cons, SolverBackend::Cholesky, 1e-10).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let worst = dense.map.normals.as_slice().iter().map(|m| (m - n).amax()).fold(0.0, f64::max);
    ensure!(worst < 1e-6 && secs < 1.0, "max deviation {worst:e}, {secs:.3} s");
    Ok(format!("max deviation {worst:.2e} (< 1e-6), {secs:.3} s (< 1 s)"))
}

fn fold_insulation() -> Outcome {
    let left = Normal::new(0.0, 0.0, 1.0);
    let right = Normal::new(0.5f64.sqrt(), 0.0, 0.5f64.sqrt());
    let mut doc = rect("fold", 16, 16, 20.0);
    doc.boundaries.push(fold(&[[8.0, 0.0], [8.0, 16.0]]));
    doc.normals.push(normal(3.5, 8.5, [left.x, left.y, left.z]));
    doc.normals.push(normal(12.5, 8.5, [right.x, right.y, right.z]));
    let part = partition_of(&doc);
    let cons = constraints(&doc, &part);
    let dense = solve_dense_normals(&part, &cons, SolverBackend::Cholesky, 1e-10).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut fold_px = 0;
    for i in 0..part.continuous_id.len() {
        let got = dense.map.normals[i];
        let d = (got - left).amax().min((got - right).amax());
        worst = worst.max(d);
        let (x, y) = part.continuous_id.coords(i);
        if part.is_fold(i) {
            fold_px += 1;
        } else if x + 1 < 16 && !part.is_fold(part.continuous_id.index(x + 1, y)) {
            // adjacent non-fold pixels never straddle a discontinuity
            let next = dense.map.normals[part.continuous_id.index(x + 1, y)];
            ensure!((got - next).amax() < 1e-6, "jump between ({x},{y}) and ({},{y}) off the fold", x + 1);
        }
    }
    ensure!(fold_px > 0 && worst < 1e-6, "within-side deviation {worst:e}, fold pixels {fold_px}");
    Ok(format!("within-side deviation {worst:.2e} (< 1e-6), jumps only across {fold_px} fold pixels"))
}

fn energy_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..200 {
        let doc = random_scene(seed, 32);
        if !validate(&doc).is_valid() {
            continue;
        }
        let rec = reconstruct(&doc, &ReconstructionConfig::default()).map_err(|e| e.to_string())?;
        let edges = rec.partition.smoothness_edges();
        let dense = solve_dense_normals(&rec.partition, &rec.constraints, SolverBackend::Cholesky, 1e-12).map_err(|e| e.to_string())?;
        let raw: Vec<Normal> = dense.raw.as_slice().iter().map(|v| v.unwrap_or_else(Normal::zeros)).collect();
        let solver = edge_energy(&edges, &raw);
        let (oracle, _) = dense_energy_oracle(&edges, rec.partition.continuous_id.len(), &rec.constraints);
        let rel = if (solver - oracle).abs() < 1e-12 { 0.0 } else { (solver - oracle).abs() / oracle };
        worst = worst.max(rel);
        checked += 1;
        if checked == 10 {
            break;
        }
    }
    ensure!(checked == 10 && worst < 1e-8, "{checked} scenes, worst relative gap {worst:e}");
    Ok(format!("10 scenes, worst relative energy gap {worst:.2e} (< 1e-8)"))
}

fn integration() -> Outcome {
    let n = Normal::new(0.4, -0.2, 1.0).normalize();
    let doc = rect("plane", 32, 32, 40.0);
    let grid = rasterize(&doc, 1.0).map_err(|e| e.to_string())?;
    let part = partition(&grid);
    let map = NormalMap::constant(grid.region_mask.clone(), n);
    let t = Instant::now();
    let sd = integrate_surface(&map, &part, &grid.intrinsics, 0, SolverBackend::Cholesky, 1e-12).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let mut got = Vec::new();
    let mut truth = Vec::new();
    for (p, z) in sd.depth() {
        let (x, y) = part.continuous_id.coords(p);
        let (u, v) = grid.intrinsics.centered(x as f64, y as f64);
        got.push(z);
        truth.push(plane_depth(n, grid.intrinsics.focal_px, u, v));
    }
    let med = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        0.5 * (s[(s.len() - 1) / 2] + s[s.len() / 2])
    };
    let k = med(&got) / med(&truth);
    let worst = got.iter().zip(&truth).map(|(g, t)| (g - k * t).abs() / (k * t)).fold(0.0, f64::max);
    ensure!(worst < 1e-3 && secs < 1.0, "max relative error {worst:e}, {secs:.3} s");
    Ok(format!("max relative depth error {worst:.2e} (< 1e-3), {secs:.3} s (< 1 s)"))
}

fn lp_ordering() -> Outcome {
    let config = ReconstructionConfig::default();
    let mut pairs = 0;
    for seed in 0..20 {
        let rec = reconstruct(&random_stacked_scene(seed), &config).map_err(|e| e.to_string())?;
        for p in &rec.pairs.pairs {
            ensure!(
                rec.scaled_depth[p.closer] + config.epsilon <= rec.scaled_depth[p.farther],
                "seed {seed}: pair ({}, {}) violated",
                p.closer,
                p.farther
            );
        }
        pairs += rec.pairs.pairs.len();
    }
    ensure!(pairs > 0, "no ordering pairs sampled");

    let (eps, eta) = (config.epsilon, config.eta);
    let mut terms = Vec::new();
    for (edge, count) in [3usize, 2, 1].into_iter().enumerate() {
        for _ in 0..count {
            terms.push(OrderingTerm {
                closer: edge as u32,
                closer_depth: 1.0,
                farther: ((edge + 1) % 3) as u32,
                farther_depth: 1.0,
            });
        }
    }
    let sol = solve_ordering_lp(3, &terms, eps, eta, LpMode::Strict).map_err(|e| e.to_string())?;
    let (obj, x) = lp_grid_oracle(3, &terms, eps, eta, eps / 2.0, 8);
    ensure!(sol.mode == LpMode::Soft, "cyclic case stayed in strict mode");
    ensure!((sol.objective - obj).abs() < 1e-9, "objective {} vs oracle {obj}", sol.objective);
    ensure!(sol.violated == violated_terms(&terms, &x, eps), "violated set {:?}", sol.violated);
    Ok(format!(
        "{pairs} pairs over 20 acyclic scenes all satisfied; cycle in soft mode, objective {:.6} = oracle {obj:.6}",
        sol.objective
    ))
}

fn z_snap() -> Outcome {
    let got = snap_normal(Normal::new(1.0, 0.0, 0.0));
    let want = Normal::new(0.91f64.sqrt(), 0.0, 0.3);
    ensure!(got == want, "{got:?}");
    Ok(format!("(1,0,0) -> ({}, {}, {})", got.x, got.y, got.z))
}

fn metric_identities() -> Outcome {
    let doc = synthetic_doc("room_corner");
    let rec = reconstruct(&doc, &ReconstructionConfig::default()).map_err(|e| e.to_string())?;
    let ids = &rec.partition.continuous_id;
    let lsiv = lsiv_rmse_points(&rec.points, &rec.points, ids).map_err(|e| e.to_string())?;
    let wk = wkdr(&rec.depth, &rec.depth, 1000, 0).map_err(|e| e.to_string())?.percent;
    let mask = rec.grid.region_mask.clone();
    let ns = normal_metrics(&rec.snapped_normals.normals, &rec.snapped_normals.normals, &mask).map_err(|e| e.to_string())?;
    let truth = BoundaryTruth::from_partition(&rec.partition);
    let b = boundary_eval(&[truth.as_prediction()], &[truth], &BoundaryConfig::default()).map_err(|e| e.to_string())?;
    let masks = planar_surface_masks(&doc, &rec.partition).map_err(|e| e.to_string())?;
    let preds: Vec<PlanePrediction> = masks.iter().map(|m| PlanePrediction { mask: m.clone(), confidence: 1.0 }).collect();
    let ap = plane_instance_ap(&preds, &masks).map_err(|e| e.to_string())?.ap;
    let gt = Grid::from_fn(16, 16, |x, y| 1.03f64.powi((y * 16 + x) as i32));
    let plane = wkdr(&Grid::new(16, 16, 1.0), &gt, 1000, 0).map_err(|e| e.to_string())?.percent;
    ensure!(
        lsiv.abs() <= 1e-9 && wk == 0.0 && ns.mean_deg == 0.0 && (b.ods, b.ois, b.ap) == (1.0, 1.0, 1.0) && ap == 1.0 && plane == 100.0,
        "lsiv {lsiv:e}, wkdr {wk}, normal {}, ods/ois/ap {}/{}/{}, plane ap {ap}, plane wkdr {plane}",
        ns.mean_deg,
        b.ods,
        b.ois,
        b.ap
    );
    Ok(format!(
        "LSIV {lsiv:.1e}, WKDR {wk}%, normal {}°, ODS=OIS=AP=1, plane AP {ap}, uniform plane WKDR {plane}%",
        ns.mean_deg
    ))
}

fn warp(cloud: &Grid<Option<[f64; 3]>>, ids: &Grid<Option<u32>>, f: impl Fn(u32) -> (f64, [f64; 3])) -> Grid<Option<[f64; 3]>> {
    Grid::from_vec(
        cloud.width(),
        cloud.height(),
        (0..cloud.len())
            .map(|i| {
                let (p, s) = (cloud[i]?, ids[i]?);
                let (l, t) = f(s);
                Some([l * p[0] + t[0], l * p[1] + t[1], l * p[2] + t[2]])
            })
            .collect(),
    )
}

fn lsiv_invariance() -> Outcome {
    let rec = reconstruct(&synthetic_doc("parallel_shelves"), &ReconstructionConfig::default()).map_err(|e| e.to_string())?;
    let ids = &rec.partition.continuous_id;
    let flat = anno3d_core::depth::backproject(&rec.depth.map(|z| if z.is_finite() { 1.0 } else { *z }), &rec.grid.intrinsics).0;
    let base = lsiv_rmse_points(&flat, &rec.points, ids).map_err(|e| e.to_string())?;
    let warped = warp(&flat, ids, |s| (0.5 + 1.7 * s as f64, [0.0, 0.0, 0.3 - 0.4 * s as f64]));
    let moved = lsiv_rmse_points(&warped, &rec.points, ids).map_err(|e| e.to_string())?;
    let shifted = warp(&rec.points, ids, |_| (1.0, [0.1, 0.0, 0.0]));
    let x_shift = lsiv_rmse_points(&shifted, &rec.points, ids).map_err(|e| e.to_string())?;
    let d = (moved - base).abs();
    ensure!(d < 1e-9 && x_shift > 1e-3, "scale/z change {d:e}, x-shift {x_shift:e}");
    Ok(format!("scale+z-shift change {d:.1e} (< 1e-9), x-shift 0.1 gives {x_shift:.3e} (> 1e-3)"))
}

fn relative_auc() -> Outcome {
    let rels = strip_relations();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ns = [
        Normal::new(s, 0.0, s),
        Normal::new(-s, 0.0, s),
        Normal::new(0.0, 0.6, 0.8),
        Normal::new(0.0, 0.6, 0.8),
        Normal::new(0.0, 0.0, 1.0),
        Normal::new(0.5, 0.0, 0.75f64.sqrt()),
    ];
    let sep = relative_normal_auc(&Grid::from_fn(12, 1, |x, _| ns[x / 2]), &rels, 100, 0).map_err(|e| e.to_string())?;
    let front = relative_normal_auc(&Grid::new(12, 1, Normal::z()), &rels, 100, 0).map_err(|e| e.to_string())?;
    ensure!(
        sep.auc_orthogonal == 1.0
            && sep.auc_parallel == 1.0
            && (front.auc_orthogonal - 0.5).abs() <= 0.05
            && (front.auc_parallel - 0.5).abs() <= 0.05,
        "separable {}/{}, frontal {}/{}",
        sep.auc_orthogonal,
        sep.auc_parallel,
        front.auc_orthogonal,
        front.auc_parallel
    );
    Ok(format!(
        "separable AUC_o = AUC_p = 1, frontal AUC_o {:.4} AUC_p {:.4} (0.5 ± 0.05)",
        front.auc_orthogonal, front.auc_parallel
    ))
}

fn boundary_counts_case() -> Outcome {
    let (pred, truth) = toy_boundary();
    let mut line = Vec::new();
    for tau in [0.25, 0.5, 0.75] {
        for matching in [Matching::Exact, Matching::Greedy] {
            let c = boundary_counts(&pred, &truth, tau, 1.5, matching).map_err(|e| e.to_string())?;
            let sel = |fold_class: bool| {
                Grid::from_fn(8, 8, |x, y| *pred.edge.get(x, y) > tau && (*pred.fold.get(x, y) > 0.5) == fold_class)
            };
            let (po, pf) = (pixels_where(&sel(false)), pixels_where(&sel(true)));
            let (go, gf) = (pixels_where(&truth.occlusion), pixels_where(&truth.fold));
            let tp = exhaustive_matching(&po, &go, 1.5) + exhaustive_matching(&pf, &gf, 1.5);
            let oracle = MatchCounts {
                tp,
                fp: po.len() + pf.len() - tp,
                fn_: go.len() + gf.len() - tp,
            };
            ensure!(c == oracle, "tau {tau} {matching:?}: {c:?} vs oracle {oracle:?}");
            if matching == Matching::Exact {
                line.push(format!("τ{tau}: tp{} fp{} fn{}", c.tp, c.fp, c.fn_));
            }
        }
    }
    Ok(format!("{} (exact and greedy match oracle)", line.join(", ")))
}

fn determinism() -> Outcome {
    let mut paths: Vec<_> = std::fs::read_dir(corpus_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    ensure!(paths.len() == 10, "corpus has {} documents", paths.len());
    let t = Instant::now();
    let run = || -> Result<Vec<Vec<u8>>, String> {
        let mut out = Vec::new();
        for p in &paths {
            let bytes = std::fs::read(p).map_err(|e| e.to_string())?;
            let doc = annotation::parse(&bytes).map_err(|e| e.to_string())?;
            let rec = reconstruct(&doc, &ReconstructionConfig::default()).map_err(|e| format!("{}: {e}", p.display()))?;
            out.push(encode_raster(&depth_to_raster(&rec.depth)));
            out.push(encode_raster(&normals_to_raster(&rec.normals)));
            out.push(encode_ply(&rec.mesh, true));
        }
        Ok(out)
    };
    let (a, b) = (run()?, run()?);
    let secs = t.elapsed().as_secs_f64();
    ensure!(a == b, "artifacts differ between runs");
    ensure!(secs < 30.0, "{secs:.1} s");
    Ok(format!("10 documents x 2 runs, DMAP/NMAP/PLY identical, {secs:.2} s (< 30 s)"))
}

fn synthetic_doc(id: &str) -> anno3d_core::AnnotationDocument {
    anno3d_core::synthetic::corpus().into_iter().find(|d| d.image_id == id).expect("corpus document")
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("normal solver constancy", solver_constancy),
        ("fold insulation", fold_insulation),
        ("smoothness energy optimality", energy_oracle),
        ("integration correctness", integration),
        ("LP ordering", lp_ordering),
        ("z-snap", z_snap),
        ("metric identities", metric_identities),
        ("LSIV invariance", lsiv_invariance),
        ("relative-normal AUC", relative_auc),
        ("boundary counts", boundary_counts_case),
        ("end-to-end determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
