//! Thin wrappers over faer's dense LU for the small local systems.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;

/// Inverse of the row-major `n x n` matrix `a`, or `None` if it is singular.
pub fn invert(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let m = Mat::from_fn(n, n, |i, j| a[i * n + j]);
    let inv = m.partial_piv_lu().inverse();
    let out: Vec<f64> = (0..n * n).map(|k| inv[(k / n, k % n)]).collect();
    out.iter().all(|x| x.is_finite()).then_some(out)
}

/// Solve `a x = b` for a row-major `n x n` matrix.
pub fn solve(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let m = Mat::from_fn(n, n, |i, j| a[i * n + j]);
    let mut rhs = Mat::from_fn(n, 1, |i, _| b[i]);
    m.partial_piv_lu().solve_in_place(&mut rhs);
    let out: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
    out.iter().all(|x| x.is_finite()).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_small_matrix() {
        let a = [4.0, 1.0, 2.0, 3.0];
        let inv = invert(2, &a).unwrap();
        let expected = [0.3, -0.1, -0.2, 0.4];
        for (x, y) in inv.iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
        let x = solve(2, &a, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
    }
}
