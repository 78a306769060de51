//! Reference-element machinery: nodal bases, quadrature tables and affine
//! element maps.

mod basis;
mod quadrature;

pub use basis::LagrangeBasis;
pub use quadrature::{gauss_legendre, gauss_legendre_unit, triangle_rule, QuadRule};

use crate::dense;
use crate::{Error, Result};

/// Basis tables tabulated at a volume quadrature rule, plus the reference
/// mass matrix and its inverse.
#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    pub basis: LagrangeBasis,
    pub rule: QuadRule,
    /// `values[q * n + i]`
    pub values: Vec<f64>,
    /// `gradients[q * n + i]` in reference coordinates
    pub gradients: Vec<[f64; 2]>,
    /// Reference mass matrix, row-major `n x n`.
    pub mass: Vec<f64>,
    pub mass_inv: Vec<f64>,
}

impl ReferenceBasis {
    pub fn new(degree: usize, volume_degree: usize) -> Result<Self> {
        let basis = LagrangeBasis::new(degree)?;
        let rule = triangle_rule(volume_degree)?;
        let n = basis.len();
        let nq = rule.len();
        let mut values = vec![0.0; nq * n];
        let mut gradients = vec![[0.0; 2]; nq * n];
        for q in 0..nq {
            let x = rule.reference_point(q);
            basis.values(x, &mut values[q * n..(q + 1) * n]);
            basis.gradients(x, &mut gradients[q * n..(q + 1) * n]);
        }
        // the mass matrix needs exactness 2ℓ, which the volume rule may not have
        let mass_rule = triangle_rule((2 * degree).max(volume_degree).min(10))?;
        let mut mass = vec![0.0; n * n];
        let mut phi = vec![0.0; n];
        for q in 0..mass_rule.len() {
            basis.values(mass_rule.reference_point(q), &mut phi);
            let w = mass_rule.weights[q];
            for i in 0..n {
                for j in 0..n {
                    mass[i * n + j] += w * phi[i] * phi[j];
                }
            }
        }
        let mass_inv = dense::invert(n, &mass)
            .ok_or_else(|| Error::InvalidArgument("singular reference mass matrix".into()))?;
        Ok(Self {
            basis,
            rule,
            values,
            gradients,
            mass,
            mass_inv,
        })
    }

    /// Number of local basis functions.
    pub fn n_funcs(&self) -> usize {
        self.basis.len()
    }

    pub fn n_points(&self) -> usize {
        self.rule.len()
    }

    #[inline]
    pub fn values_at(&self, q: usize) -> &[f64] {
        let n = self.n_funcs();
        &self.values[q * n..(q + 1) * n]
    }

    #[inline]
    pub fn gradients_at(&self, q: usize) -> &[[f64; 2]] {
        let n = self.n_funcs();
        &self.gradients[q * n..(q + 1) * n]
    }
}

/// Affine map `x = a + J ξ` from the reference triangle onto a physical one.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub origin: [f64; 2],
    /// Columns are `b - a` and `c - a`, stored row-major.
    pub jacobian: [f64; 4],
    pub jacobian_inv: [f64; 4],
    pub det: f64,
}

impl ElementGeometry {
    /// Geometry of the triangle with vertices `v`; `index` is only used for
    /// error reporting.
    pub fn new(v: [[f64; 2]; 3], index: usize) -> Result<Self> {
        let j = [
            v[1][0] - v[0][0],
            v[2][0] - v[0][0],
            v[1][1] - v[0][1],
            v[2][1] - v[0][1],
        ];
        let det = j[0] * j[3] - j[1] * j[2];
        let scale = (j[0].abs() + j[1].abs() + j[2].abs() + j[3].abs()).powi(2);
        if det <= 1e-14 * scale || !det.is_finite() {
            return Err(Error::DegenerateTriangle(index));
        }
        let jacobian_inv = [j[3] / det, -j[1] / det, -j[2] / det, j[0] / det];
        Ok(Self {
            origin: v[0],
            jacobian: j,
            jacobian_inv,
            det,
        })
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    #[inline]
    pub fn to_physical(&self, xi: [f64; 2]) -> [f64; 2] {
        let j = self.jacobian;
        [
            self.origin[0] + j[0] * xi[0] + j[1] * xi[1],
            self.origin[1] + j[2] * xi[0] + j[3] * xi[1],
        ]
    }

    #[inline]
    pub fn to_reference(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        let k = self.jacobian_inv;
        [k[0] * d[0] + k[1] * d[1], k[2] * d[0] + k[3] * d[1]]
    }

    /// Physical gradient `J^{-T} ∇ξ`.
    #[inline]
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let k = self.jacobian_inv;
        [k[0] * g[0] + k[2] * g[1], k[1] * g[0] + k[3] * g[1]]
    }
}

/// Push a reference rule forward onto a physical triangle: physical points
/// and weights scaled by `|det J|`.
pub fn map_to_physical(vertices: [[f64; 2]; 3], rule: &QuadRule) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    let geom = ElementGeometry::new(vertices, 0)?;
    let points = (0..rule.len())
        .map(|q| geom.to_physical(rule.reference_point(q)))
        .collect();
    let weights = rule.weights.iter().map(|w| w * geom.det).collect();
    Ok((points, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_triangle_maps_to_itself() {
        let rule = triangle_rule(6).unwrap();
        let (pts, w) = map_to_physical([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &rule).unwrap();
        for q in 0..rule.len() {
            assert_eq!(pts[q], rule.reference_point(q));
            assert_eq!(w[q], rule.weights[q]);
        }
    }

    #[test]
    fn physical_integrals() {
        let rule = triangle_rule(5).unwrap();
        let tri = [[0.3, -0.2], [1.4, 0.1], [0.5, 0.9]];
        let area = 0.5 * ((1.4 - 0.3) * (0.9 + 0.2) - (0.5 - 0.3) * (0.1 + 0.2));
        let (_, w) = map_to_physical(tri, &rule).unwrap();
        assert!((w.iter().sum::<f64>() - area).abs() < 1e-14);

        let (pts, w) = map_to_physical([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &rule).unwrap();
        let int_x: f64 = pts.iter().zip(&w).map(|(p, w)| p[0] * w).sum();
        assert!((int_x - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let rule = triangle_rule(1).unwrap();
        let err = map_to_physical([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], &rule);
        assert!(matches!(err, Err(Error::DegenerateTriangle(_))));
    }

    #[test]
    fn affine_interpolant_reproduced_at_quadrature_points() {
        let refb = ReferenceBasis::new(1, 6).unwrap();
        let tri = [[0.1, 0.2], [0.9, -0.3], [0.4, 0.8]];
        let geom = ElementGeometry::new(tri, 0).unwrap();
        let f = |x: [f64; 2]| 1.5 - 2.0 * x[0] + 0.7 * x[1];
        let coeffs: Vec<f64> = tri.iter().map(|v| f(*v)).collect();
        for q in 0..refb.n_points() {
            let x = geom.to_physical(refb.rule.reference_point(q));
            let val: f64 = refb.values_at(q).iter().zip(&coeffs).map(|(a, b)| a * b).sum();
            assert!((val - f(x)).abs() < 1e-13);
            let mut grad = [0.0; 2];
            for (g, c) in refb.gradients_at(q).iter().zip(&coeffs) {
                let pg = geom.push_gradient(*g);
                grad[0] += pg[0] * c;
                grad[1] += pg[1] * c;
            }
            assert!((grad[0] + 2.0).abs() < 1e-13 && (grad[1] - 0.7).abs() < 1e-13);
        }
    }

    #[test]
    fn reference_mass_matrix_p1() {
        let refb = ReferenceBasis::new(1, 2).unwrap();
        // P1 mass on the reference triangle: (1/24) [[2,1,1],[1,2,1],[1,1,2]]
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 / 24.0 } else { 1.0 / 24.0 };
                assert!((refb.mass[i * 3 + j] - expected).abs() < 1e-15);
            }
        }
    }
}
