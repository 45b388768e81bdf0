//! Symmetric positive-definite sparse systems arising from graph Laplacians
//! with Dirichlet rows eliminated.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverBackend {
    /// Sparse Cholesky factorization.
    Cholesky,
    /// Jacobi-preconditioned conjugate gradients.
    ConjugateGradient,
}

/// Symmetric matrix assembled from (row, col, value) contributions; duplicates add.
#[derive(Debug, Clone)]
pub struct SymmetricSystem {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SymmetricSystem {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    /// Adds `w (x_i - x_j)^2` to the quadratic form.
    pub fn add_edge(&mut self, i: usize, j: usize, w: f64) {
        self.entries.push((i, i, w));
        self.entries.push((j, j, w));
        self.entries.push((i, j, -w));
        self.entries.push((j, i, -w));
    }

    /// Column-major compressed entries with duplicates summed.
    fn compressed(&self) -> Vec<(usize, usize, f64)> {
        let mut e = self.entries.clone();
        e.sort_by_key(|a| (a.1, a.0));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(e.len());
        for (r, c, v) in e {
            match out.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => out.push((r, c, v)),
            }
        }
        out
    }

    /// Solves `A x = b` for every right-hand side.
    pub fn solve(&self, rhs: &[Vec<f64>], backend: SolverBackend, tolerance: f64) -> Result<Vec<Vec<f64>>> {
        if rhs.iter().any(|b| b.len() != self.n) {
            return Err(Error::Solver("right-hand side length mismatch".into()));
        }
        if self.n == 0 {
            return Ok(vec![Vec::new(); rhs.len()]);
        }
        match backend {
            SolverBackend::Cholesky => self.solve_cholesky(rhs),
            SolverBackend::ConjugateGradient => self.solve_cg(rhs, tolerance),
        }
    }

    fn solve_cholesky(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        // sequential factorization keeps results bitwise reproducible
        faer::set_global_parallelism(Par::Seq);
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .compressed()
            .into_iter()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Solver(format!("cholesky: {e:?}")))?;
        let b = Mat::<f64>::from_fn(self.n, rhs.len(), |i, k| rhs[k][i]);
        let x = llt.solve(&b);
        Ok((0..rhs.len())
            .map(|k| (0..self.n).map(|i| x[(i, k)]).collect())
            .collect())
    }

    fn solve_cg(&self, rhs: &[Vec<f64>], tolerance: f64) -> Result<Vec<Vec<f64>>> {
        let csr = Csr::from_entries(self.n, &self.compressed());
        let diag: Vec<f64> = (0..self.n).map(|i| csr.diagonal(i)).collect();
        if diag.iter().any(|&d| d <= 0.0) {
            return Err(Error::Solver("non-positive diagonal".into()));
        }
        rhs.iter()
            .map(|b| conjugate_gradient(&csr, &diag, b, tolerance, 20 * self.n + 100))
            .collect()
    }
}

struct Csr {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    fn from_entries(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(r, c, v) in entries {
            rows[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            indptr,
            indices,
            values,
        }
    }

    fn diagonal(&self, i: usize) -> f64 {
        (self.indptr[i]..self.indptr[i + 1])
            .find(|&k| self.indices[k] == i)
            .map(|k| self.values[k])
            .unwrap_or(0.0)
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *o = acc;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient(a: &Csr, diag: &[f64], b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        a.mul(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol * b_norm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!("conjugate gradients did not reach {tol:e} in {max_iter} iterations")))
}
