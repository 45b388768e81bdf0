mod common;

use std::time::Instant;

use anno3d_core::annotation::Side;
use anno3d_core::depth::{
    build_mesh, integrate_surface, integration_edges, sample_ordering_pairs, snap_normal, solve_ordering_lp, OrderingTerm,
};
use anno3d_core::normals::{Normal, NormalMap};
use anno3d_core::partition::{partition, rasterize};
use anno3d_core::sparse::SolverBackend;
use anno3d_core::synthetic::{fold, normal, occlusion, rect};
use anno3d_core::{reconstruct, Grid, LpMode, ReconstructionConfig};
use common::*;
use nalgebra::{DMatrix, DVector};

#[test]
fn snap_hits_the_floor_exactly() {
    assert_eq!(snap_normal(Normal::new(1.0, 0.0, 0.0)), Normal::new(0.91f64.sqrt(), 0.0, 0.3));
    assert_eq!(snap_normal(Normal::new(0.6, 0.0, 0.8)), Normal::new(0.6, 0.0, 0.8));
    assert_eq!(snap_normal(Normal::z()), Normal::z());
}

#[test]
fn slanted_plane_integrates_to_analytic_depth() {
    let n = Normal::new(0.4, -0.2, 1.0).normalize();
    let doc = rect("plane", 32, 32, 40.0);
    let grid = rasterize(&doc, 1.0).unwrap();
    let part = partition(&grid);
    let map = NormalMap::constant(grid.region_mask.clone(), n);
    let t = Instant::now();
    let sd = integrate_surface(&map, &part, &grid.intrinsics, 0, SolverBackend::Cholesky, 1e-12).unwrap();
    assert!(t.elapsed().as_secs_f64() < 1.0);

    let truth: Vec<f64> = sd
        .pixels
        .iter()
        .map(|&p| {
            let (x, y) = part.continuous_id.coords(p);
            let (u, v) = grid.intrinsics.centered(x as f64, y as f64);
            plane_depth(n, grid.intrinsics.focal_px, u, v)
        })
        .collect();
    let got: Vec<f64> = sd.depth().map(|(_, z)| z).collect();
    let worst = max_rel_error_after_median(&got, &truth);
    assert!(worst < 1e-3, "max relative error {worst}");
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len().is_multiple_of(2) {
        0.5 * (s[m - 1] + s[m])
    } else {
        s[m]
    }
}

fn max_rel_error_after_median(got: &[f64], truth: &[f64]) -> f64 {
    let k = median(got) / median(truth);
    got.iter().zip(truth).map(|(g, t)| (g - k * t).abs() / (k * t)).fold(0.0, f64::max)
}

#[test]
fn pipeline_recovers_slanted_plane() {
    let n = Normal::new(0.4, -0.2, 1.0).normalize();
    let mut doc = rect("plane", 120, 90, 150.0);
    doc.normals.push(normal(60.0, 45.0, [n.x, n.y, n.z]));
    let rec = reconstruct(&doc, &ReconstructionConfig::default()).unwrap();
    let intr = rec.grid.intrinsics;
    let mut got = Vec::new();
    let mut truth = Vec::new();
    for p in 0..rec.depth.len() {
        let (x, y) = rec.depth.coords(p);
        let (u, v) = intr.centered(x as f64, y as f64);
        got.push(rec.depth[p]);
        truth.push(plane_depth(n, intr.focal_px, u, v));
    }
    assert!(max_rel_error_after_median(&got, &truth) < 1e-3);
    assert!((median(&got) - 1.0).abs() < 1e-9);
}

#[test]
fn integration_residual_matches_dense_oracle() {
    for seed in 0..6 {
        let doc = random_scene(100 + seed, 20);
        let Ok(rec) = reconstruct(&doc, &ReconstructionConfig::default()) else {
            continue;
        };
        for sd in &rec.surfaces {
            let edges = integration_edges(&rec.snapped_normals, &rec.partition, &rec.grid.intrinsics, sd.surface);
            if edges.is_empty() {
                continue;
            }
            let slot: std::collections::HashMap<usize, usize> =
                sd.pixels.iter().enumerate().map(|(i, &p)| (p, i)).collect();
            let z: Vec<f64> = sd.log_depth.clone();
            let solver: f64 = edges
                .iter()
                .map(|e| (z[slot[&e.to]] - z[slot[&e.from]] - e.target).powi(2))
                .sum();
            let mut a = DMatrix::<f64>::zeros(edges.len(), sd.pixels.len());
            let mut b = DVector::<f64>::zeros(edges.len());
            for (r, e) in edges.iter().enumerate() {
                a[(r, slot[&e.to])] = 1.0;
                a[(r, slot[&e.from])] = -1.0;
                b[r] = e.target;
            }
            let x = a.clone().svd(true, true).solve(&b, 1e-12).unwrap();
            let oracle = (a * x - b).norm_squared();
            assert!(solver <= oracle * (1.0 + 1e-6) + 1e-14, "seed {seed}: {solver} vs {oracle}");
        }
    }
}

#[test]
fn per_surface_medians_are_one() {
    for doc in anno3d_core::synthetic::corpus() {
        let rec = reconstruct(&doc, &ReconstructionConfig::default()).unwrap();
        for sd in &rec.surfaces {
            let z: Vec<f64> = sd.depth().map(|(_, z)| z).collect();
            assert!((median(&z) - 1.0).abs() < 1e-9, "{} surface {}", doc.image_id, sd.surface);
        }
    }
}

#[test]
fn horizontal_cut_pairs() {
    let mut doc = rect("cut", 20, 20, 30.0);
    doc.boundaries.push(occlusion(&[[0.0, 10.0], [20.0, 10.0]], Side::Left));
    let grid = rasterize(&doc, 1.0).unwrap();
    let part = partition(&grid);
    let (set, warnings) = sample_ordering_pairs(&grid, &part, 5, 2);
    assert!(warnings.is_empty());
    assert_eq!(set.pairs.len(), 4);
    for pair in &set.pairs {
        let (px, py) = part.continuous_id.coords(pair.closer);
        let (qx, qy) = part.continuous_id.coords(pair.farther);
        assert_eq!(px, qx);
        assert!(py < qy, "closer side is the top");
    }
}

#[test]
fn occlusion_on_region_border_has_no_pairs() {
    let mut doc = rect("edge", 20, 20, 30.0);
    doc.boundaries.push(occlusion(&[[0.0, 0.2], [20.0, 0.2]], Side::Right));
    let grid = rasterize(&doc, 1.0).unwrap();
    let part = partition(&grid);
    let (set, warnings) = sample_ordering_pairs(&grid, &part, 5, 2);
    assert!(set.pairs.is_empty());
    assert!(warnings.iter().any(|w| w.code == "ordering_side_missing"));
}

#[test]
fn two_surface_lp_by_hand() {
    let term = OrderingTerm {
        closer: 0,
        closer_depth: 1.0,
        farther: 1,
        farther_depth: 1.0,
    };
    let sol = solve_ordering_lp(2, &[term], 0.05, 0.01, LpMode::Strict).unwrap();
    assert!((sol.scales[0] - 0.01).abs() < 1e-12);
    assert!((sol.scales[1] - 0.06).abs() < 1e-12);
    assert!(term.satisfied(&sol.scales, 0.05));
}

/// Cycle A<B<C<A with distinct pair multiplicities; the optimum breaks the
/// cheapest edge.
fn cyclic_terms(m: [usize; 3]) -> Vec<OrderingTerm> {
    let mut terms = Vec::new();
    for (edge, &count) in m.iter().enumerate() {
        for _ in 0..count {
            terms.push(OrderingTerm {
                closer: edge as u32,
                closer_depth: 1.0,
                farther: ((edge + 1) % 3) as u32,
                farther_depth: 1.0,
            });
        }
    }
    terms
}

#[test]
fn cyclic_ordering_matches_brute_force() {
    let (eps, eta) = (0.05, 0.01);
    for m in [[3, 2, 1], [1, 4, 2], [2, 1, 3], [1, 1, 1]] {
        let terms = cyclic_terms(m);
        let sol = solve_ordering_lp(3, &terms, eps, eta, LpMode::Strict).unwrap();
        assert_eq!(sol.mode, LpMode::Soft);
        assert!(sol.warnings.iter().any(|w| w.code == "ordering_infeasible"));
        let (obj, x) = lp_grid_oracle(3, &terms, eps, eta, eps / 2.0, 8);
        assert!((sol.objective - obj).abs() < 1e-9, "{m:?}: {} vs {obj}", sol.objective);
        assert_eq!(sol.violated, violated_terms(&terms, &x, eps), "{m:?}");
    }
}

#[test]
fn random_acyclic_scenes_satisfy_every_pair() {
    let config = ReconstructionConfig::default();
    let mut total_pairs = 0;
    for seed in 0..20 {
        let doc = random_stacked_scene(seed);
        let rec = reconstruct(&doc, &config).unwrap();
        assert_eq!(rec.lp.mode, LpMode::Strict, "seed {seed}");
        for pair in &rec.pairs.pairs {
            assert!(
                rec.scaled_depth[pair.closer] + config.epsilon <= rec.scaled_depth[pair.farther],
                "seed {seed}"
            );
        }
        assert!(rec.lp.scales.iter().all(|&x| x >= config.eta));
        total_pairs += rec.pairs.pairs.len();
    }
    assert!(total_pairs > 100);
}

#[test]
fn mesh_counts_and_cuts() {
    let doc = rect("m", 12, 9, 20.0);
    let grid = rasterize(&doc, 1.0).unwrap();
    let part = partition(&grid);
    let points = Grid::from_fn(12, 9, |x, y| Some([x as f64, y as f64, 1.0]));
    assert_eq!(build_mesh(&points, &part).triangles.len(), 2 * 11 * 8);

    let mut cut = rect("m", 12, 9, 20.0);
    cut.boundaries.push(occlusion(&[[0.0, 4.5], [12.0, 4.5]], Side::Left));
    let grid = rasterize(&cut, 1.0).unwrap();
    let part = partition(&grid);
    let mesh = build_mesh(&points, &part);
    for t in &mesh.triangles {
        let s = mesh.surface[t[0] as usize];
        assert!(t.iter().all(|&v| mesh.surface[v as usize] == s));
    }
    assert!(mesh.triangles.len() < 2 * 11 * 8);

    let mut folded = rect("m", 12, 9, 20.0);
    folded.boundaries.push(fold(&[[6.0, 0.0], [6.0, 9.0]]));
    let grid = rasterize(&folded, 1.0).unwrap();
    let part = partition(&grid);
    assert_eq!(build_mesh(&points, &part).triangles.len(), 2 * 11 * 8);
}
