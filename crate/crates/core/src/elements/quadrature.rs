//! Quadrature on the reference triangle `conv{(0,0), (1,0), (0,1)}` and on
//! line segments.

use crate::{Error, Result};

/// A quadrature rule on the reference triangle.
///
/// Points are barycentric coordinates `(λ0, λ1, λ2)` with respect to the
/// reference vertices `(0,0), (1,0), (0,1)`; weights sum to the reference
/// area `1/2`.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Reference coordinates `(ξ, η) = (λ1, λ2)` of point `q`.
    #[inline]
    pub fn reference_point(&self, q: usize) -> [f64; 2] {
        [self.points[q][1], self.points[q][2]]
    }
}

enum Orbit {
    Centroid(f64),
    /// `(a, b, b)` and permutations, `b = (1 - a) / 2`.
    S21(f64, f64),
    /// `(a, b, c)` and all six permutations, `c = 1 - a - b`.
    S111(f64, f64, f64),
}

// Fully symmetric rules with interior points and positive weights. Weights are
// normalized to sum to one here and scaled by the reference area below.
fn symmetric_orbits(degree: usize) -> Option<(usize, Vec<Orbit>)> {
    use Orbit::*;
    let rule = match degree {
        1 => (1, vec![Centroid(1.0)]),
        2 => (2, vec![S21(2.0 / 3.0, 1.0 / 3.0)]),
        3 | 4 => (
            4,
            vec![
                S21(0.108_103_018_168_070_23, 0.223_381_589_678_011_47),
                S21(0.816_847_572_980_458_5, 0.109_951_743_655_321_87),
            ],
        ),
        5 => (
            5,
            vec![
                Centroid(0.225),
                S21(0.059_715_871_789_769_82, 0.132_394_152_788_506_18),
                S21(0.797_426_985_353_087_3, 0.125_939_180_544_827_15),
            ],
        ),
        6 => (
            6,
            vec![
                S21(0.501_426_509_658_179_2, 0.116_786_275_726_379_37),
                S21(0.873_821_971_016_995_5, 0.050_844_906_370_206_817),
                S111(
                    0.053_145_049_844_816_947,
                    0.310_352_451_033_784_4,
                    0.082_851_075_618_373_575,
                ),
            ],
        ),
        7 | 8 => (
            8,
            vec![
                Centroid(0.144_315_607_677_787_17),
                S21(0.081_414_823_414_553_688, 0.095_091_634_267_284_625),
                S21(0.658_861_384_496_479_6, 0.103_217_370_534_718_25),
                S21(0.898_905_543_365_938, 0.032_458_497_623_198_08),
                S111(
                    0.008_394_777_409_957_605,
                    0.263_112_829_634_638_1,
                    0.027_230_314_174_434_994,
                ),
            ],
        ),
        _ => return None,
    };
    Some(rule)
}

/// Quadrature rule on the reference triangle exact for polynomials of total
/// degree `exactness_degree` (1..=10). No point lies on the boundary.
///
/// Degrees 3 and 7 are served by the next higher symmetric rule; degrees 9
/// and 10 use a collapsed Gauss-Legendre product rule.
pub fn triangle_rule(exactness_degree: usize) -> Result<QuadRule> {
    if !(1..=10).contains(&exactness_degree) {
        return Err(Error::UnsupportedQuadrature(exactness_degree));
    }
    if let Some((degree, orbits)) = symmetric_orbits(exactness_degree) {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for orbit in orbits {
            match orbit {
                Orbit::Centroid(w) => {
                    points.push([1.0 / 3.0; 3]);
                    weights.push(0.5 * w);
                }
                Orbit::S21(a, w) => {
                    let b = 0.5 * (1.0 - a);
                    for p in [[a, b, b], [b, a, b], [b, b, a]] {
                        points.push(p);
                        weights.push(0.5 * w);
                    }
                }
                Orbit::S111(a, b, w) => {
                    let c = 1.0 - a - b;
                    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                        points.push(p);
                        weights.push(0.5 * w);
                    }
                }
            }
        }
        return Ok(QuadRule {
            points,
            weights,
            degree,
        });
    }
    Ok(collapsed_rule(exactness_degree))
}

/// Duffy-collapsed tensor Gauss-Legendre rule: `ξ = u`, `η = v (1 - u)`.
fn collapsed_rule(degree: usize) -> QuadRule {
    // the u-integrand carries an extra (1 - u) factor
    let n = (degree + 2).div_ceil(2);
    let (gx, gw) = gauss_legendre_unit(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (u, wu) in gx.iter().zip(&gw) {
        for (v, wv) in gx.iter().zip(&gw) {
            let xi = *u;
            let eta = v * (1.0 - u);
            points.push([1.0 - xi - eta, xi, eta]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    QuadRule {
        points,
        weights,
        degree,
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        w.iter().map(|w| 0.5 * w).collect(),
    )
}
