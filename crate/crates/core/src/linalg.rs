//! Sparse matrices and linear solvers for the Newton updates.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use crate::error::SolverError;

/// Compressed sparse row matrix with sorted, unique column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` entries, summing duplicates.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = entries.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(sorted.len());
        let mut val: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
                continue;
            }
            col.push(c);
            val.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            *yi = s;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.col[self.row_ptr[i]..self.row_ptr[i + 1]];
        match r.binary_search(&j) {
            Ok(k) => self.val[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinearSolver {
    /// Sparse LU factorization.
    Direct,
    /// BiCGSTAB with ILU(0) preconditioning.
    Iterative { tolerance: f64, max_iterations: usize },
}

impl Default for LinearSolver {
    fn default() -> Self {
        LinearSolver::Direct
    }
}

/// Solves `A x = b`.
pub fn solve(a: &CsrMatrix, b: &[f64], solver: LinearSolver) -> Result<Vec<f64>, SolverError> {
    match solver {
        LinearSolver::Direct => solve_direct(a, b),
        LinearSolver::Iterative { tolerance, max_iterations } => bicgstab(a, b, tolerance, max_iterations),
    }
}

fn solve_direct(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    let mut trip = Vec::with_capacity(a.nnz());
    for i in 0..a.n {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            trip.push(Triplet::new(i, a.col[k], a.val[k]));
        }
    }
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.n, a.n, &trip)
        .map_err(|e| SolverError::Linear(format!("{e:?}")))?;
    let lu = m.sp_lu().map_err(|e| SolverError::Linear(format!("{e:?}")))?;
    let rhs = Mat::from_fn(a.n, 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    let out: Vec<f64> = (0..a.n).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::Linear("singular matrix".into()));
    }
    Ok(out)
}

/// Incomplete LU factorization with the sparsity of `A`.
struct Ilu0 {
    m: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    fn new(a: &CsrMatrix) -> Result<Self, SolverError> {
        let mut m = a.clone();
        let mut diag = vec![usize::MAX; a.n];
        for (i, d) in diag.iter_mut().enumerate() {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                if m.col[k] == i {
                    *d = k;
                }
            }
            if *d == usize::MAX {
                return Err(SolverError::Linear(format!("missing diagonal in row {i}")));
            }
        }
        for i in 1..m.n {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                let j = m.col[k];
                if j >= i {
                    break;
                }
                let piv = m.val[diag[j]];
                if piv == 0.0 {
                    return Err(SolverError::Linear(format!("zero pivot in row {j}")));
                }
                m.val[k] /= piv;
                let lik = m.val[k];
                // row i -= lik * row j (upper part), restricted to the pattern of row i
                let mut p = k + 1;
                for q in diag[j] + 1..m.row_ptr[j + 1] {
                    let c = m.col[q];
                    while p < m.row_ptr[i + 1] && m.col[p] < c {
                        p += 1;
                    }
                    if p < m.row_ptr[i + 1] && m.col[p] == c {
                        m.val[p] -= lik * m.val[q];
                    }
                }
            }
        }
        Ok(Self { m, diag })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let m = &self.m;
        for i in 0..m.n {
            let mut s = r[i];
            for k in m.row_ptr[i]..self.diag[i] {
                s -= m.val[k] * z[m.col[k]];
            }
            z[i] = s;
        }
        for i in (0..m.n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..m.row_ptr[i + 1] {
                s -= m.val[k] * z[m.col[k]];
            }
            z[i] = s / m.val[self.diag[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned BiCGSTAB; converges when `‖r‖ ≤ tol ‖b‖`.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, SolverError> {
    let n = a.n;
    let pre = Ilu0::new(a)?;
    let mut x = vec![0.0; n];
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for _ in 0..max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut y);
        a.mul_vec(&y, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= tol * bn {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(x);
        }
        pre.apply(&s, &mut z);
        a.mul_vec(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= tol * bn {
            return Ok(x);
        }
        if omega == 0.0 {
            break;
        }
    }
    Err(SolverError::Linear(format!("BiCGSTAB did not reach {tol:e} in {max_iter} iterations")))
}
