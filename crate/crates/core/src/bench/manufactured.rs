//! The rotational manufactured solution with a point singularity at the
//! origin: `v = t |x|^β (x₂, -x₁)`, `q = t² (|x|^γ - ⟨|·|^γ⟩_Ω)`.

use crate::constitutive::ModelParams;
use crate::elements::gauss_legendre;
use crate::rothe::ProblemData;
use crate::tensor::Tensor2;
use crate::{Error, Result};

/// How the exact velocity enters as boundary datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryData {
    /// Penalize against zero on `∂Ω`.
    Zero,
    /// Penalize against the trace of the exact velocity.
    #[default]
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    pub rho: f64,
    pub params: ModelParams,
    pub beta: f64,
    pub gamma: f64,
    pub pressure_mean: f64,
    pub boundary_data: BoundaryData,
}

impl ManufacturedCase {
    pub fn new(params: ModelParams, rho: f64, boundary_data: BoundaryData) -> Result<Self> {
        params.validate()?;
        let p = params.p;
        let beta = 2.0 * (rho - 1.0) / p;
        let gamma = rho - 2.0 / params.p_conjugate();
        let pressure_mean = pressure_mean(gamma)?;
        Ok(Self {
            rho,
            params,
            beta,
            gamma,
            pressure_mean,
            boundary_data,
        })
    }

    pub fn p(&self) -> f64 {
        self.params.p
    }

    pub fn exact_velocity(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r == 0.0 {
            return [0.0; 2];
        }
        let s = t * r.powf(self.beta);
        [s * x[1], -s * x[0]]
    }

    /// `∂_t v`.
    pub fn velocity_time_derivative(&self, x: [f64; 2]) -> [f64; 2] {
        self.exact_velocity(1.0, x)
    }

    /// `∇v` with entries `(i, j) = ∂_j v_i`.
    pub fn velocity_gradient(&self, t: f64, x: [f64; 2]) -> Result<Tensor2> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 == 0.0 {
            return Err(Error::SingularPoint);
        }
        let b = self.beta;
        let rb = r2.powf(0.5 * b);
        let c = t * b * rb / r2;
        Ok(Tensor2::new(
            c * x[0] * x[1],
            c * x[1] * x[1] + t * rb,
            -c * x[0] * x[0] - t * rb,
            -c * x[0] * x[1],
        ))
    }

    pub fn exact_pressure(&self, t: f64, x: [f64; 2]) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let rg = if r == 0.0 {
            if self.gamma > 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            r.powf(self.gamma)
        };
        t * t * (rg - self.pressure_mean)
    }

    /// `(g, G)` with `G = S(Dv) - qI` and `g = ∂_t v + [∇v]v`, so that
    /// `(g, z) + (G, ∇z)` is the momentum form of the exact pair.
    pub fn forcing(&self, t: f64, x: [f64; 2]) -> Result<([f64; 2], Tensor2)> {
        let grad = self.velocity_gradient(t, x)?;
        let v = self.exact_velocity(t, x);
        let conv = grad.apply(v);
        let dt = self.velocity_time_derivative(x);
        let q = self.exact_pressure(t, x);
        let big_g = self.params.stress(&grad) - Tensor2::diag(q, q);
        Ok(([dt[0] + conv[0], dt[1] + conv[1]], big_g))
    }
}

impl ProblemData for ManufacturedCase {
    fn forcing(&self, t: f64, x: [f64; 2]) -> ([f64; 2], Tensor2) {
        // Quadrature points never hit the origin; guard anyway.
        ManufacturedCase::forcing(self, t, x).unwrap_or(([0.0; 2], Tensor2::ZERO))
    }

    fn boundary(&self, t: f64, x: [f64; 2]) -> Option<[f64; 2]> {
        match self.boundary_data {
            BoundaryData::Zero => None,
            BoundaryData::Exact => Some(self.exact_velocity(t, x)),
        }
    }
}

/// Mean of `|x|^γ` over `(-1, 1)²`, `γ > -2`.
///
/// In polar coordinates the square splits into eight triangles, each
/// contributing `∫_0^{π/4} sec^{γ+2}θ / (γ+2) dθ`; the remaining integrand
/// is smooth, so Gauss-Legendre quadrature converges geometrically.
pub fn pressure_mean(gamma: f64) -> Result<f64> {
    if !(gamma > -2.0) {
        return Err(Error::InvalidArgument(format!("pressure mean needs γ > -2, got {gamma}")));
    }
    let (x, w) = gauss_legendre(40);
    let half = std::f64::consts::FRAC_PI_8;
    let s: f64 = x
        .iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let th = half * (xi + 1.0);
            wi * half * th.cos().powf(-(gamma + 2.0))
        })
        .sum();
    Ok(2.0 * s / (gamma + 2.0))
}
