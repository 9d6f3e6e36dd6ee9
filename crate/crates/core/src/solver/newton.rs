//! Newton iteration with a colored finite-difference Jacobian.

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::linalg::{solve, CsrMatrix, LinearSolver};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    pub atol: f64,
    pub rtol: f64,
    pub max_line_search: usize,
    /// Largest saturation change accepted in one iteration.
    pub max_saturation_change: f64,
    pub linear: LinearSolver,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iterations: 25, atol: 1e-10, rtol: 1e-8, max_line_search: 8, max_saturation_change: 0.2, linear: LinearSolver::Direct }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonOutcome {
    pub iterations: usize,
    pub initial_residual: f64,
    pub residual: f64,
}

/// Greedy distance-2 coloring: nodes sharing a color have disjoint closed
/// neighborhoods, so their columns can be perturbed together.
pub fn color_distance2(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut color = vec![usize::MAX; n];
    let mut mark: Vec<usize> = Vec::new();
    for u in 0..n {
        mark.clear();
        for &v in &adj[u] {
            if color[v] != usize::MAX {
                mark.push(color[v]);
            }
            for &w in &adj[v] {
                if w != u && color[w] != usize::MAX {
                    mark.push(color[w]);
                }
            }
        }
        mark.sort_unstable();
        mark.dedup();
        let mut c = 0;
        for &m in &mark {
            if m == c {
                c += 1;
            } else if m > c {
                break;
            }
        }
        color[u] = c;
    }
    color
}

/// Sparse structure of a residual with two unknowns per node.
#[derive(Clone, Debug)]
pub struct JacobianPattern {
    pub adj: Vec<Vec<usize>>,
    pub color: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
}

impl JacobianPattern {
    pub fn new(adj: Vec<Vec<usize>>) -> Self {
        let color = color_distance2(&adj);
        let nc = color.iter().map(|c| c + 1).max().unwrap_or(0);
        let mut groups = vec![Vec::new(); nc];
        for (u, &c) in color.iter().enumerate() {
            groups[c].push(u);
        }
        Self { adj, color, groups }
    }

    pub fn num_colors(&self) -> usize {
        self.groups.len()
    }
}

fn inf_norm<T: Scalar>(r: &[T]) -> f64 {
    r.iter().map(|v| v.to_f64_lossy().abs()).fold(0.0, f64::max)
}

fn l2_norm<T: Scalar>(r: &[T]) -> f64 {
    r.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>().sqrt()
}

/// Forward-difference Jacobian at `x` with residual `r0 = R(x)`.
pub fn fd_jacobian<T, R>(pattern: &JacobianPattern, x: &[T], r0: &[T], residual: &R) -> Result<CsrMatrix, SolverError>
where
    T: Scalar,
    R: Fn(&[T], &mut [T]) -> Result<(), SolverError>,
{
    fd_jacobian_scaled(pattern, x, r0, residual, 1.0)
}

/// [`fd_jacobian`] with all difference steps multiplied by `scale`.
pub fn fd_jacobian_scaled<T, R>(
    pattern: &JacobianPattern,
    x: &[T],
    r0: &[T],
    residual: &R,
    scale: f64,
) -> Result<CsrMatrix, SolverError>
where
    T: Scalar,
    R: Fn(&[T], &mut [T]) -> Result<(), SolverError>,
{
    let n = x.len();
    let eps = scale * f64::EPSILON.sqrt() * if T::epsilon().to_f64_lossy() > 1e-10 { 64.0 } else { 1.0 };
    let p_scale = (0..n / 2).map(|u| x[2 * u + 1].to_f64_lossy().abs()).fold(1.0, f64::max);
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut xp = x.to_vec();
    let mut rp = vec![T::zero(); n];
    for group in &pattern.groups {
        for k in 0..2 {
            let mut steps = Vec::with_capacity(group.len());
            for &u in group {
                let j = 2 * u + k;
                let xj = x[j].to_f64_lossy();
                let delta = if k == 0 {
                    // saturation: step toward the interior of [0, 1]
                    let d = eps * xj.abs().max(1.0);
                    if xj > 0.5 {
                        -d
                    } else {
                        d
                    }
                } else {
                    eps * xj.abs().max(p_scale)
                };
                xp[j] = T::lit(xj + delta);
                steps.push((xp[j] - x[j]).to_f64_lossy());
            }
            residual(&xp, &mut rp)?;
            for (&u, &delta) in group.iter().zip(&steps) {
                let j = 2 * u + k;
                xp[j] = x[j];
                for &w in std::iter::once(&u).chain(&pattern.adj[u]) {
                    for r in [2 * w, 2 * w + 1] {
                        let d = (rp[r] - r0[r]).to_f64_lossy() / delta;
                        if d != 0.0 {
                            entries.push((r, j, d));
                        }
                    }
                }
            }
        }
    }
    // keep the diagonal present for the preconditioner
    for i in 0..n {
        entries.push((i, i, 0.0));
    }
    Ok(CsrMatrix::from_triplets(n, &entries))
}

/// Solves `R(x) = 0` in place. `project` maps iterates back into the
/// admissible set after every update.
///
/// Upwind fluxes make `R` only piecewise smooth. When a difference step
/// straddles a kink the line search can stall; the Jacobian is then rebuilt
/// once with much shorter steps before giving up.
pub fn newton_solve<T, R, P>(
    x: &mut [T],
    pattern: &JacobianPattern,
    residual: R,
    project: P,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, SolverError>
where
    T: Scalar,
    R: Fn(&[T], &mut [T]) -> Result<(), SolverError>,
    P: Fn(&mut [T]),
{
    let n = x.len();
    let mut r = vec![T::zero(); n];
    residual(x, &mut r)?;
    let r0 = inf_norm(&r);
    let mut out = NewtonOutcome { iterations: 0, initial_residual: r0, residual: r0 };
    // single precision cannot reach the f64 default; floor by its resolution
    let rtol = opts.rtol.max(T::epsilon().to_f64_lossy() * 1e3);
    let converged = |norm: f64| norm <= opts.atol || norm <= rtol * r0;
    if !r0.is_finite() {
        return Err(SolverError::NonConvergence { iterations: 0, residual: r0 });
    }
    if converged(r0) {
        return Ok(out);
    }
    let mut trial = x.to_vec();
    let mut rt = vec![T::zero(); n];
    for it in 1..=opts.max_iterations {
        let base = l2_norm(&r);
        let mut accepted = None;
        for fd_scale in [1.0, 1e-3] {
            let jac = fd_jacobian_scaled(pattern, x, &r, &residual, fd_scale)?;
            let rhs: Vec<f64> = r.iter().map(|v| -v.to_f64_lossy()).collect();
            let dx = solve(&jac, &rhs, opts.linear)?;
            // saturation chop: shrink the whole update so no saturation
            // moves more than `max_saturation_change`
            let ds = (0..n / 2).map(|u| dx[2 * u].abs()).fold(0.0, f64::max);
            let mut alpha = if ds > opts.max_saturation_change { opts.max_saturation_change / ds } else { 1.0 };
            for _ in 0..=opts.max_line_search {
                for i in 0..n {
                    trial[i] = x[i] + T::lit(alpha * dx[i]);
                }
                project(&mut trial);
                if residual(&trial, &mut rt).is_ok() {
                    let norm = l2_norm(&rt);
                    if norm.is_finite() && norm < base {
                        accepted = Some(alpha);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            log::debug!("newton {it}: line search stalled, refreshing the Jacobian");
        }
        let Some(alpha) = accepted else {
            return Err(SolverError::NonConvergence { iterations: it, residual: inf_norm(&r) });
        };
        x.copy_from_slice(&trial);
        std::mem::swap(&mut r, &mut rt);
        out.iterations = it;
        out.residual = inf_norm(&r);
        log::debug!("newton {it}: |R| = {:e} (step {alpha})", out.residual);
        if converged(out.residual) {
            return Ok(out);
        }
    }
    Err(SolverError::NonConvergence { iterations: opts.max_iterations, residual: out.residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Vec<Vec<usize>> {
        (0..n)
            .map(|i| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < n {
                    v.push(i + 1);
                }
                v
            })
            .collect()
    }

    #[test]
    fn distance2_coloring_on_path() {
        let adj = path(10);
        let c = color_distance2(&adj);
        for u in 0..10 {
            for v in u + 1..(u + 3).min(10) {
                assert_ne!(c[u], c[v], "{u} {v}");
            }
        }
        assert_eq!(c.iter().max(), Some(&2));
    }

    // two unknowns per node, tridiagonal coupling
    fn nonlinear(x: &[f64], out: &mut [f64]) -> Result<(), SolverError> {
        let n = x.len() / 2;
        for u in 0..n {
            let left = if u > 0 { x[2 * (u - 1)] } else { 0.0 };
            let right = if u + 1 < n { x[2 * (u + 1) + 1] } else { 0.0 };
            out[2 * u] = x[2 * u].powi(3) + x[2 * u] - 0.5 * left - 1.0;
            out[2 * u + 1] = 2.0 * x[2 * u + 1] + right.sin() - x[2 * u];
        }
        Ok(())
    }

    #[test]
    fn fd_jacobian_matches_dense_columns() {
        let n = 12;
        let pattern = JacobianPattern::new(path(n));
        let x: Vec<f64> = (0..2 * n).map(|i| 0.1 * i as f64).collect();
        let mut r0 = vec![0.0; 2 * n];
        nonlinear(&x, &mut r0).unwrap();
        let j = fd_jacobian(&pattern, &x, &r0, &nonlinear).unwrap();
        for col in 0..2 * n {
            let mut xp = x.clone();
            let h = 1e-7;
            xp[col] += h;
            let mut rp = vec![0.0; 2 * n];
            nonlinear(&xp, &mut rp).unwrap();
            for row in 0..2 * n {
                let d = (rp[row] - r0[row]) / h;
                assert!((j.get(row, col) - d).abs() < 1e-5, "({row}, {col})");
            }
        }
    }

    #[test]
    fn linear_problem_converges_in_one_iteration() {
        let n = 8;
        let pattern = JacobianPattern::new(path(n));
        let linear = |x: &[f64], out: &mut [f64]| -> Result<(), SolverError> {
            let m = x.len() / 2;
            for u in 0..m {
                let left = if u > 0 { x[2 * (u - 1) + 1] } else { 0.0 };
                out[2 * u] = 3.0 * x[2 * u] - x[2 * u + 1] - 1.0;
                out[2 * u + 1] = 4.0 * x[2 * u + 1] - left - 2.0;
            }
            Ok(())
        };
        let mut x = vec![0.0; 2 * n];
        // unchopped: the even unknowns move by more than a saturation may
        let opts = NewtonOptions { max_saturation_change: f64::INFINITY, ..NewtonOptions::default() };
        let o = newton_solve(&mut x, &pattern, linear, |_| {}, &opts).unwrap();
        assert_eq!(o.iterations, 1);
        assert!(o.residual < 1e-10);
    }

    #[test]
    fn nonlinear_problem_converges() {
        let n = 20;
        let pattern = JacobianPattern::new(path(n));
        let mut x = vec![0.0; 2 * n];
        let o = newton_solve(&mut x, &pattern, nonlinear, |_| {}, &NewtonOptions::default()).unwrap();
        assert!(o.iterations <= 10);
        let mut r = vec![0.0; 2 * n];
        nonlinear(&x, &mut r).unwrap();
        assert!(r.iter().all(|v| v.abs() <= 1e-10 || v.abs() <= 1e-8 * o.initial_residual));
    }
}
