//! Nodal Lagrange bases on the reference triangle.

use crate::dense;
use crate::{Error, Result};

/// Nodal basis of `P_ℓ` on the reference triangle with equispaced nodes
/// `(i/ℓ, j/ℓ)`, `i + j <= ℓ`. The first three nodes are the vertices, so for
/// `ℓ = 1` the basis functions are the barycentric coordinates.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    degree: usize,
    nodes: Vec<[f64; 2]>,
    exponents: Vec<(i32, i32)>,
    // coeffs[k * n + m]: coefficient of monomial m in basis function k
    coeffs: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::InvalidArgument(format!(
                "polynomial degree {degree} not supported (expected 1..=3)"
            )));
        }
        let l = degree as f64;
        let mut nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for j in 0..=degree {
            for i in 0..=(degree - j) {
                let is_vertex = (i == 0 && j == 0) || (i == degree && j == 0) || (i == 0 && j == degree);
                if !is_vertex {
                    nodes.push([i as f64 / l, j as f64 / l]);
                }
            }
        }
        let mut exponents = Vec::new();
        for total in 0..=degree as i32 {
            for j in 0..=total {
                exponents.push((total - j, j));
            }
        }
        let n = nodes.len();
        // V[i][m] = monomial m at node i; basis coefficients C = V^{-1} (columns)
        let mut vandermonde = vec![0.0; n * n];
        for (i, x) in nodes.iter().enumerate() {
            for (m, &(a, b)) in exponents.iter().enumerate() {
                vandermonde[i * n + m] = x[0].powi(a) * x[1].powi(b);
            }
        }
        let inv = dense::invert(n, &vandermonde)
            .ok_or_else(|| Error::InvalidArgument("singular Vandermonde matrix".into()))?;
        // φ_k(x) = Σ_m inv[m][k] x^m
        let mut coeffs = vec![0.0; n * n];
        for k in 0..n {
            for m in 0..n {
                coeffs[k * n + m] = inv[m * n + k];
            }
        }
        Ok(Self {
            degree,
            nodes,
            exponents,
            coeffs,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions, `(ℓ+1)(ℓ+2)/2`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Values of all basis functions at reference point `x`.
    pub fn values(&self, x: [f64; 2], out: &mut [f64]) {
        let n = self.len();
        if self.degree == 1 {
            out[0] = 1.0 - x[0] - x[1];
            out[1] = x[0];
            out[2] = x[1];
            return;
        }
        let mono: Vec<f64> = self
            .exponents
            .iter()
            .map(|&(a, b)| x[0].powi(a) * x[1].powi(b))
            .collect();
        for (k, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|m| self.coeffs[k * n + m] * mono[m]).sum();
        }
    }

    /// Reference gradients of all basis functions at `x`.
    pub fn gradients(&self, x: [f64; 2], out: &mut [[f64; 2]]) {
        let n = self.len();
        if self.degree == 1 {
            out[0] = [-1.0, -1.0];
            out[1] = [1.0, 0.0];
            out[2] = [0.0, 1.0];
            return;
        }
        let dmono: Vec<[f64; 2]> = self
            .exponents
            .iter()
            .map(|&(a, b)| {
                let dx = if a > 0 {
                    a as f64 * x[0].powi(a - 1) * x[1].powi(b)
                } else {
                    0.0
                };
                let dy = if b > 0 {
                    b as f64 * x[0].powi(a) * x[1].powi(b - 1)
                } else {
                    0.0
                };
                [dx, dy]
            })
            .collect();
        for (k, o) in out.iter_mut().enumerate().take(n) {
            let mut g = [0.0; 2];
            for m in 0..n {
                g[0] += self.coeffs[k * n + m] * dmono[m][0];
                g[1] += self.coeffs[k * n + m] * dmono[m][1];
            }
            *o = g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodal_property() {
        for degree in 1..=3 {
            let basis = LagrangeBasis::new(degree).unwrap();
            assert_eq!(basis.len(), (degree + 1) * (degree + 2) / 2);
            let mut vals = vec![0.0; basis.len()];
            for (i, node) in basis.nodes().iter().enumerate() {
                basis.values(*node, &mut vals);
                for (k, v) in vals.iter().enumerate() {
                    let expected = if k == i { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-12, "degree {degree}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_zero_gradient_sum() {
        for degree in 1..=3 {
            let basis = LagrangeBasis::new(degree).unwrap();
            let mut vals = vec![0.0; basis.len()];
            let mut grads = vec![[0.0; 2]; basis.len()];
            for x in [[0.2, 0.3], [0.7, 0.1], [0.05, 0.9]] {
                basis.values(x, &mut vals);
                basis.gradients(x, &mut grads);
                assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let gx: f64 = grads.iter().map(|g| g[0]).sum();
                let gy: f64 = grads.iter().map(|g| g[1]).sum();
                assert!(gx.abs() < 1e-11 && gy.abs() < 1e-11);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let basis = LagrangeBasis::new(3).unwrap();
        let n = basis.len();
        let x = [0.31, 0.22];
        let h = 1e-6;
        let mut grads = vec![[0.0; 2]; n];
        basis.gradients(x, &mut grads);
        let mut plus = vec![0.0; n];
        let mut minus = vec![0.0; n];
        for dir in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[dir] += h;
            xm[dir] -= h;
            basis.values(xp, &mut plus);
            basis.values(xm, &mut minus);
            for k in 0..n {
                let fd = (plus[k] - minus[k]) / (2.0 * h);
                assert!((fd - grads[k][dir]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn rejects_unsupported_degree() {
        assert!(LagrangeBasis::new(0).is_err());
        assert!(LagrangeBasis::new(4).is_err());
    }
}
