use std::collections::BTreeMap;

use crate::diagnostics::Warning;
use crate::grid::Grid;
use crate::partition::SurfacePartition;
use crate::sparse::{SolverBackend, SymmetricSystem};
use crate::Result;

use super::{Normal, NormalConstraintSet, NormalMap};

/// Pre-normalization magnitudes below this fall back to the frontal normal.
const MIN_MAGNITUDE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DenseNormals {
    pub map: NormalMap,
    /// Minimizer before normalization; `None` outside the region and on
    /// unconstrained components.
    pub raw: Grid<Option<Normal>>,
    pub warnings: Vec<Warning>,
}

/// Smoothness energy of a field over the partition's constrained graph.
pub fn smoothness_energy(partition: &SurfacePartition, field: &Grid<Normal>) -> f64 {
    partition
        .smoothness_edges()
        .iter()
        .map(|&(p, q, w)| w * (field[p] - field[q]).norm_squared())
        .sum()
}

/// Minimizes the smoothness energy subject to the constraints, one sparse
/// system per connected component of the graph (three right-hand sides
/// share one factorization), then normalizes per pixel and flips any
/// normal facing away from the camera.
pub fn solve_dense_normals(
    partition: &SurfacePartition,
    constraints: &NormalConstraintSet,
    backend: SolverBackend,
    tolerance: f64,
) -> Result<DenseNormals> {
    let (w, h) = (partition.width(), partition.height());
    let n = w * h;
    let edges = partition.smoothness_edges();

    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(p, q, wt) in &edges {
        adjacency[p].push((q, wt));
        adjacency[q].push((p, wt));
    }

    let mut raw: Grid<Option<Normal>> = Grid::new(w, h, None);
    let mut warnings = Vec::new();
    let mut visited = vec![false; n];
    let mut isolated = Vec::new();

    for start in 0..n {
        if visited[start] || !partition.in_region(start) {
            continue;
        }
        // gather the component in BFS order from its first scan-order pixel
        let mut comp = vec![start];
        visited[start] = true;
        let mut head = 0;
        while head < comp.len() {
            let p = comp[head];
            head += 1;
            for &(q, _) in &adjacency[p] {
                if !visited[q] {
                    visited[q] = true;
                    comp.push(q);
                }
            }
        }
        comp.sort_unstable();

        if !comp.iter().any(|&p| constraints.get(p).is_some()) {
            if comp.len() == 1 && partition.is_boundary(comp[0]) {
                isolated.push(comp[0]);
            } else {
                let mut smooth: Vec<u32> = comp.iter().filter_map(|&p| partition.smooth_id[p]).collect();
                smooth.sort_unstable();
                smooth.dedup();
                warnings.push(Warning::new(
                    "unconstrained_surface",
                    format!("smooth surfaces {smooth:?} have no normal constraint; filled with (0,0,1)"),
                ));
                for &p in &comp {
                    raw[p] = Some(Normal::z());
                }
            }
            continue;
        }
        solve_component(&comp, &adjacency, constraints, backend, tolerance, &mut raw)?;
    }

    let mut normals = Grid::new(w, h, Normal::zeros());
    let valid = partition.continuous_id.map(|c| c.is_some());
    for p in 0..n {
        if let Some(v) = raw[p] {
            normals[p] = finalize(v);
        }
    }
    // boundary pixels with no attachment copy a same-surface neighbor
    for &p in &isolated {
        let fill = normals
            .neighbors4(p)
            .map(|(q, _)| q)
            .find(|&q| raw[q].is_some() && partition.smooth_id[q] == partition.smooth_id[p])
            .map(|q| normals[q])
            .unwrap_or_else(Normal::z);
        normals[p] = fill;
    }
    Ok(DenseNormals {
        map: NormalMap { normals, valid },
        raw,
        warnings,
    })
}

fn finalize(v: Normal) -> Normal {
    let mag = v.norm();
    if mag.is_nan() || mag < MIN_MAGNITUDE {
        return Normal::z();
    }
    let u = v / mag;
    if u.z < 0.0 {
        -u
    } else {
        u
    }
}

fn solve_component(
    comp: &[usize],
    adjacency: &[Vec<(usize, f64)>],
    constraints: &NormalConstraintSet,
    backend: SolverBackend,
    tolerance: f64,
    raw: &mut Grid<Option<Normal>>,
) -> Result<()> {
    let mut local: BTreeMap<usize, usize> = BTreeMap::new();
    for &p in comp {
        match constraints.get(p) {
            Some(c) => raw[p] = Some(c.normal),
            None => {
                let k = local.len();
                local.insert(p, k);
            }
        }
    }
    if local.is_empty() {
        return Ok(());
    }
    let m = local.len();
    let mut system = SymmetricSystem::new(m);
    let mut rhs = vec![vec![0.0; m]; 3];
    for (&p, &i) in &local {
        for &(q, wt) in &adjacency[p] {
            match local.get(&q) {
                Some(&j) => {
                    // each undirected edge is visited from both ends
                    system.add(i, i, wt);
                    system.add(i, j, -wt);
                }
                None => {
                    let fixed = constraints.get(q).expect("component pixel is free or fixed").normal;
                    system.add(i, i, wt);
                    for c in 0..3 {
                        rhs[c][i] += wt * fixed[c];
                    }
                }
            }
        }
    }
    let sol = system.solve(&rhs, backend, tolerance)?;
    for (&p, &i) in &local {
        raw[p] = Some(Normal::new(sol[0][i], sol[1][i], sol[2][i]));
    }
    Ok(())
}
