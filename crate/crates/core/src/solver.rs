//! Damped Newton iteration with a sparse direct solver.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Mat;
use log::debug;

use crate::forms::{CsrMatrix, Pattern, SparseSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub abs_tol: f64,
    /// Tolerance relative to the residual at the initial guess.
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Halve the update until the residual decreases (at most 10 times).
    /// Off by default.
    pub backtracking: bool,
    /// Relative accuracy of the linear solves when an old factorization is
    /// reused as a preconditioner (direct solves are exact).
    pub linear_rtol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-10,
            max_iterations: 50,
            backtracking: false,
            linear_rtol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Euclidean residual norms, starting with the initial guess.
    pub residuals: Vec<f64>,
}

/// Sparse LU solver that keeps the symbolic factorization for as long as
/// the sparsity pattern does not change.
///
/// With [`LinearSolver::with_reuse`] the numeric factorization is kept as
/// well and used to precondition GMRES on later matrices of the same
/// pattern. A fresh factorization is computed only when GMRES fails to
/// converge quickly.
#[derive(Debug, Default)]
pub struct LinearSolver {
    symbolic: Option<(Arc<Pattern>, SymbolicLu<usize>)>,
    factor: Option<(Arc<Pattern>, Lu<usize, f64>)>,
    reuse: bool,
    stale: bool,
    /// Number of numeric factorizations performed.
    pub factorizations: usize,
    /// Total GMRES iterations over all reused solves.
    pub krylov_iterations: usize,
}

/// GMRES iterations after which the factorization is considered stale.
const STALE_AFTER: usize = 20;
const RESTART: usize = 40;
const MAX_KRYLOV: usize = 60;

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solver that reuses old factorizations as preconditioners.
    pub fn with_reuse() -> Self {
        Self {
            reuse: true,
            ..Self::default()
        }
    }

    /// Solve `A x = b`.
    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_tolerance(a, b, 1e-12)
    }

    /// Solve `A x = b`; iterative solves stop once the residual has been
    /// reduced by the factor `rtol`.
    pub fn solve_with_tolerance(&mut self, a: &CsrMatrix, b: &[f64], rtol: f64) -> Result<Vec<f64>> {
        let n = a.n();
        if b.len() != n {
            return Err(Error::InvalidArgument(format!("right-hand side has length {}, expected {n}", b.len())));
        }
        let pat = &a.pattern;
        let same = |p: &Arc<Pattern>| Arc::ptr_eq(p, pat) || **p == **pat;
        if self.reuse && !self.stale {
            if let Some((p, lu)) = &self.factor {
                if same(p) {
                    if let Some((x, its)) = gmres(a, b, rtol, |r| apply_lu(lu, r)) {
                        self.krylov_iterations += its;
                        self.stale = its > STALE_AFTER;
                        debug!("gmres converged in {its} iterations");
                        return finite(x);
                    }
                    debug!("gmres did not converge, refactorizing");
                }
            }
        }
        // The CSR arrays of A are the CSC arrays of Aᵀ.
        let symbolic_t = SymbolicSparseColMatRef::new_checked(n, n, &pat.row_ptr, None, &pat.col_idx);
        if !matches!(&self.symbolic, Some((p, _)) if same(p)) {
            let sym = SymbolicLu::try_new(symbolic_t).map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
            self.symbolic = Some((pat.clone(), sym));
        }
        let sym = self.symbolic.as_ref().map(|(_, s)| s.clone()).expect("set above");
        let mat_t = SparseColMatRef::new(symbolic_t, &a.values);
        let lu = Lu::try_new_with_symbolic(sym, mat_t).map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        self.factorizations += 1;
        let x = apply_lu(&lu, b);
        if self.reuse {
            self.factor = Some((pat.clone(), lu));
            self.stale = false;
        }
        finite(x)
    }
}

fn finite(x: Vec<f64>) -> Result<Vec<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve("solution is not finite (singular matrix?)".into()));
    }
    Ok(x)
}

/// Solve with a factorization of `Aᵀ`.
fn apply_lu(lu: &Lu<usize, f64>, b: &[f64]) -> Vec<f64> {
    let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    lu.solve_transpose_in_place(rhs.as_mut());
    (0..b.len()).map(|i| rhs[(i, 0)]).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Right-preconditioned restarted GMRES. Returns the solution and the
/// iteration count, or `None` without convergence.
fn gmres<P: Fn(&[f64]) -> Vec<f64>>(a: &CsrMatrix, b: &[f64], rtol: f64, precond: P) -> Option<(Vec<f64>, usize)> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Some((x, 0));
    }
    let target = rtol * bnorm;
    let mut total = 0;
    while total < MAX_KRYLOV {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if !beta.is_finite() {
            return None;
        }
        if beta <= target {
            return Some((x, total));
        }
        let mut basis = vec![r.iter().map(|v| v / beta).collect::<Vec<f64>>()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        let mut k = 0;
        while k < RESTART && total < MAX_KRYLOV {
            let mut w = a.mul_vec(&precond(&basis[k]));
            let mut h = vec![0.0; k + 2];
            for (j, vj) in basis.iter().enumerate() {
                h[j] = w.iter().zip(vj).map(|(a, b)| a * b).sum();
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= h[j] * vi;
                }
            }
            h[k + 1] = norm(&w);
            for j in 0..k {
                let t = cs[j] * h[j] + sn[j] * h[j + 1];
                h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
                h[j] = t;
            }
            let d = h[k].hypot(h[k + 1]);
            let (c, s) = if d == 0.0 { (1.0, 0.0) } else { (h[k] / d, h[k + 1] / d) };
            let wnorm = h[k + 1];
            h[k] = d;
            h[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[k]);
            g[k] *= c;
            hess.push(h);
            k += 1;
            total += 1;
            if g[k].abs() <= target || wnorm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wnorm).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| hess[j][i] * y[j]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        let mut z = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&basis) {
            for (zj, vj) in z.iter_mut().zip(vi) {
                *zj += yi * vj;
            }
        }
        for (xi, di) in x.iter_mut().zip(precond(&z)) {
            *xi += di;
        }
    }
    let ax = a.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    (norm(&r) <= target).then_some((x, total))
}

/// Solve `F(x) = 0` by Newton's method. `system(x, true)` must return the
/// residual and Jacobian at `x`; `system(x, false)` only the residual.
pub fn newton_solve<F>(x: &mut [f64], config: &NewtonConfig, solver: &mut LinearSolver, mut system: F) -> Result<NewtonReport>
where
    F: FnMut(&[f64], bool) -> Result<SparseSystem>,
{
    let mut sys = system(x, true)?;
    let mut norm = sys.residual_norm();
    let mut residuals = vec![norm];
    let target = config.abs_tol.max(config.rel_tol * norm);
    let diverged = |iterations, history: &Vec<f64>| Error::NewtonDivergence {
        iterations,
        last_residual: *history.last().unwrap_or(&f64::NAN),
        history: history.clone(),
    };
    for it in 0..config.max_iterations {
        if !norm.is_finite() {
            return Err(diverged(it, &residuals));
        }
        if norm <= target {
            return Ok(NewtonReport { iterations: it, residuals });
        }
        let jac = sys.jacobian.as_ref().expect("Jacobian requested");
        let started = std::time::Instant::now();
        let dx = solver.solve_with_tolerance(jac, &sys.residual, config.linear_rtol)?;
        debug!("linear solve: {:.3} s", started.elapsed().as_secs_f64());
        let x0 = x.to_vec();
        let mut step = 1.0;
        loop {
            for ((xi, x0i), d) in x.iter_mut().zip(&x0).zip(&dx) {
                *xi = x0i - step * d;
            }
            let trial = system(x, false)?.residual_norm();
            if !config.backtracking || (trial.is_finite() && trial < norm) || step < 1e-3 {
                break;
            }
            step *= 0.5;
        }
        let started = std::time::Instant::now();
        sys = system(x, true)?;
        debug!("assembly: {:.3} s", started.elapsed().as_secs_f64());
        norm = sys.residual_norm();
        debug!("newton iteration {}: residual {norm:.3e} (step {step})", it + 1);
        residuals.push(norm);
    }
    if norm <= target {
        return Ok(NewtonReport {
            iterations: config.max_iterations,
            residuals,
        });
    }
    Err(diverged(config.max_iterations, &residuals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_solve_matches_dense() {
        let dense = vec![4.0, 1.0, 0.0, 2.0, 5.0, 1.0, 0.0, 3.0, 6.0];
        let a = CsrMatrix::from_dense(3, &dense);
        let mut s = LinearSolver::new();
        let x = s.solve(&a, &[1.0, 2.0, 3.0]).unwrap();
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-12);
        }
        let x2 = s.solve(&a, &[0.0, 1.0, 0.0]).unwrap();
        assert!((a.mul_vec(&x2)[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reused_factorization_preconditions_nearby_matrix() {
        let n = 30;
        let band = |shift: f64| {
            let mut d = vec![0.0; n * n];
            for i in 0..n {
                d[i * n + i] = 4.0 + shift * (i as f64).sin();
                if i + 1 < n {
                    d[i * n + i + 1] = -1.0;
                    d[(i + 1) * n + i] = -1.5;
                }
            }
            CsrMatrix::from_dense(n, &d)
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut s = LinearSolver::with_reuse();
        s.solve(&band(0.0), &b).unwrap();
        let a = band(0.2);
        let x = s.solve(&a, &b).unwrap();
        assert_eq!(s.factorizations, 1);
        assert!(s.krylov_iterations > 0);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-9);
        }
    }

    #[test]
    fn newton_scalar_cubic() {
        let pattern = Arc::new(Pattern::from_rows(vec![vec![0]]));
        let mut x = vec![3.0];
        let rep = newton_solve(&mut x, &NewtonConfig::default(), &mut LinearSolver::new(), |x, jac| {
            let mut j = CsrMatrix::zeros(pattern.clone());
            j.add(0, 0, 3.0 * x[0] * x[0]);
            Ok(SparseSystem {
                residual: vec![x[0].powi(3) - 8.0],
                jacobian: jac.then_some(j),
                n_velocity: 1,
                n_pressure: 0,
            })
        })
        .unwrap();
        assert!((x[0] - 2.0).abs() < 1e-9);
        assert!(rep.iterations < 10);
    }
}
