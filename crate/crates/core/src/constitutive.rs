//! Power-law extra stress with `(p, δ)`-structure, its shifted variants,
//! the associated N-functions and the natural error maps `F` and `F*`.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::elements::gauss_legendre_unit;
use crate::tensor::{symmetrizer, Tensor2, Tensor4};
use crate::{Error, Result};

static WARNED_P: AtomicBool = AtomicBool::new(false);
static WARNED_ALPHA: AtomicBool = AtomicBool::new(false);

fn warn_once(flag: &AtomicBool, msg: impl FnOnce() -> String) {
    if !flag.swap(true, Ordering::Relaxed) {
        log::warn!("{}", msg());
    }
}

/// Stress discretization used for the viscous term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StressVariant {
    /// Local DG: shifted-flux face penalty.
    #[default]
    Ldg,
    /// Symmetric interior penalty with an explicit lifting correction.
    Sip,
}

/// Skew-symmetric discretization of the convective term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvectiveVariant {
    /// Temam-type volume form with upwind-free face corrections.
    I,
    /// Antisymmetrized form built on the DG gradient.
    #[default]
    II,
    /// Stokes flow, no convection.
    None,
}

/// How the face shift of the LDG penalty enters the Newton Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftLinearization {
    /// The shift is updated every iteration but not differentiated.
    #[default]
    Frozen,
    /// Full derivative including the shift's dependence on the state.
    Exact,
}

/// Definition of the face shift `⟨|𝒟_h v|⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaceShift {
    /// Mean of the two adjacent elementwise means of `|𝒟_h v|`.
    #[default]
    ElementMeans,
    /// Mean over the face quadrature points of the two-sided average.
    FaceQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub p: f64,
    pub delta: f64,
    pub alpha: f64,
    pub ell: usize,
    pub stress_variant: StressVariant,
    pub convective_variant: ConvectiveVariant,
    pub shift_linearization: ShiftLinearization,
    pub face_shift: FaceShift,
    /// Penalty threshold below which the SIP form may lose coercivity.
    pub sip_alpha_warning: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            p: 2.0,
            delta: 1e-4,
            alpha: 2.5,
            ell: 1,
            stress_variant: StressVariant::Ldg,
            convective_variant: ConvectiveVariant::II,
            shift_linearization: ShiftLinearization::Frozen,
            face_shift: FaceShift::ElementMeans,
            sip_alpha_warning: 1.0,
        }
    }
}

impl ModelParams {
    pub fn new(p: f64, delta: f64) -> Self {
        Self {
            p,
            delta,
            ..Self::default()
        }
    }

    /// Check ranges; logs warnings for parameters outside the analysed regime.
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p must lie in (1, ∞), got {}", self.p)));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("δ must be nonnegative, got {}", self.delta)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("α must be positive, got {}", self.alpha)));
        }
        if !(1..=3).contains(&self.ell) {
            return Err(Error::InvalidArgument(format!("ℓ must lie in 1..=3, got {}", self.ell)));
        }
        if self.p <= 2.0 && self.convective_variant != ConvectiveVariant::None {
            warn_once(&WARNED_P, || {
                format!("p = {} is at or below 2; the convective term is outside the analysed range", self.p)
            });
        }
        if self.stress_variant == StressVariant::Sip && self.alpha < self.sip_alpha_warning {
            warn_once(&WARNED_ALPHA, || format!("α = {} is below the SIP threshold {}", self.alpha, self.sip_alpha_warning));
        }
        Ok(())
    }

    /// Conjugate exponent `p' = p / (p - 1)`.
    pub fn p_conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `S(A) = (δ + |A^sym|)^{p-2} A^sym`.
    pub fn stress(&self, a: &Tensor2) -> Tensor2 {
        self.shifted_stress(a, 0.0)
    }

    /// `S_a(A) = (δ + a + |A^sym|)^{p-2} A^sym`, the flux with
    /// `(p, δ + a)`-structure.
    pub fn shifted_stress(&self, a: &Tensor2, shift: f64) -> Tensor2 {
        let s = a.sym();
        let n = s.norm();
        let d = self.delta + shift;
        if n == 0.0 {
            return Tensor2::ZERO;
        }
        s.scale((d + n).powf(self.p - 2.0))
    }

    pub fn stress_jacobian(&self, a: &Tensor2) -> Result<Tensor4> {
        self.shifted_stress_jacobian(a, 0.0)
    }

    /// `∂S_a/∂A`. Acts on full tensors and includes the symmetrization,
    /// so `J B = J B^sym`.
    pub fn shifted_stress_jacobian(&self, a: &Tensor2, shift: f64) -> Result<Tensor4> {
        let s = a.sym();
        let n = s.norm();
        let d = self.delta + shift;
        let sym = symmetrizer();
        if n == 0.0 {
            if d == 0.0 {
                if self.p < 2.0 {
                    return Err(Error::SingularStress { p: self.p });
                }
                let c = if self.p == 2.0 { 1.0 } else { 0.0 };
                return Ok(scale4(&sym, c));
            }
            return Ok(scale4(&sym, d.powf(self.p - 2.0)));
        }
        let c1 = (d + n).powf(self.p - 2.0);
        let c2 = (self.p - 2.0) * (d + n).powf(self.p - 3.0) / n;
        let mut j = scale4(&sym, c1);
        for r in 0..4 {
            for c in 0..4 {
                j[r][c] += c2 * s.0[r] * s.0[c];
            }
        }
        Ok(j)
    }

    /// `∂S_a(A)/∂a`.
    pub fn shifted_stress_shift_derivative(&self, a: &Tensor2, shift: f64) -> Tensor2 {
        let s = a.sym();
        let n = s.norm();
        if n == 0.0 {
            return Tensor2::ZERO;
        }
        s.scale((self.p - 2.0) * (self.delta + shift + n).powf(self.p - 3.0))
    }

    /// `F(A) = (δ + |A^sym|)^{(p-2)/2} A^sym`.
    pub fn f_map(&self, a: &Tensor2) -> Tensor2 {
        let s = a.sym();
        let n = s.norm();
        if n == 0.0 {
            return Tensor2::ZERO;
        }
        s.scale((self.delta + n).powf(0.5 * (self.p - 2.0)))
    }

    /// `F*(A) = (δ^{p-1} + |A^sym|)^{(p'-2)/2} A^sym`.
    pub fn f_star_map(&self, a: &Tensor2) -> Tensor2 {
        let s = a.sym();
        let n = s.norm();
        if n == 0.0 {
            return Tensor2::ZERO;
        }
        let pc = self.p_conjugate();
        s.scale((self.delta.powf(self.p - 1.0) + n).powf(0.5 * (pc - 2.0)))
    }

    /// `φ'_a(t) = (δ + a + t)^{p-2} t`.
    pub fn phi_prime(&self, t: f64, shift: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        (self.delta + shift + t).powf(self.p - 2.0) * t
    }

    /// The shifted N-function `φ_a(t) = ∫_0^t φ'_a(s) ds`.
    pub fn phi(&self, t: f64, shift: f64) -> Result<f64> {
        if !(t >= 0.0) || !(shift >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "φ_a(t) needs t, a ≥ 0, got t = {t}, a = {shift}"
            )));
        }
        Ok(phi_closed_or_quadrature(self.p, self.delta + shift, t))
    }
}

fn scale4(m: &Tensor4, s: f64) -> Tensor4 {
    m.map(|row| row.map(|x| x * s))
}

/// `φ_{p,d}(t) = ∫_0^t (d + s)^{p-2} s ds`.
pub(crate) fn phi_closed_or_quadrature(p: f64, d: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if d == 0.0 {
        return t.powf(p) / p;
    }
    if (p - 1.0).abs() < 1e-3 || t < 0.1 * d {
        return phi_quadrature(p, d, t);
    }
    // ∫ (d+s)^{p-2} s ds = (d+s)^p / p - d (d+s)^{p-1} / (p-1)
    let anti = |x: f64| (d + x).powf(p) / p - d * (d + x).powf(p - 1.0) / (p - 1.0);
    anti(t) - anti(0.0)
}

/// 64-point Gauss-Legendre on `[0, t]`, geometrically graded towards the
/// origin when `t ≫ d` so the kink of the integrand at `s ≈ d` is resolved.
fn phi_quadrature(p: f64, d: f64, t: f64) -> f64 {
    let (x, w) = gauss_legendre_unit(64);
    let levels = if d > 0.0 && t > d { ((t / d).log2().ceil() as i32 + 1).min(60) } else { 0 };
    let integrate = |a: f64, b: f64| {
        x.iter()
            .zip(&w)
            .map(|(x, w)| {
                let s = a + (b - a) * x;
                w * (d + s).powf(p - 2.0) * s
            })
            .sum::<f64>()
            * (b - a)
    };
    let mut lo = t * 0.5f64.powi(levels);
    let mut total = integrate(0.0, lo);
    for _ in 0..levels {
        total += integrate(lo, 2.0 * lo);
        lo *= 2.0;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::apply4;

    fn params(p: f64, delta: f64) -> ModelParams {
        ModelParams::new(p, delta)
    }

    #[test]
    fn linear_case_is_the_symmetric_part() {
        let m = params(2.0, 0.3);
        let a = Tensor2::new(1.0, 2.0, -0.5, 3.0);
        assert_eq!(m.stress(&a), a.sym());
        let j = m.stress_jacobian(&a).unwrap();
        assert_eq!(j, symmetrizer());
    }

    #[test]
    fn antisymmetric_input_gives_zero_stress() {
        let m = params(2.5, 1e-4);
        assert_eq!(m.stress(&Tensor2::new(0.0, 1.0, -1.0, 0.0)), Tensor2::ZERO);
    }

    #[test]
    fn cubic_law_example() {
        let m = params(3.0, 0.0);
        let s = m.stress(&Tensor2::diag(2.0, 0.0));
        assert!((s.0[0] - 4.0).abs() < 1e-14 && s.0[3].abs() < 1e-14);
    }

    #[test]
    fn phi_examples() {
        assert!((params(2.0, 0.0).phi(1.7, 0.0).unwrap() - 1.7 * 1.7 / 2.0).abs() < 1e-14);
        assert!((params(3.0, 0.0).phi(2.0, 0.0).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        for a in [0.0, 0.5, 3.0] {
            assert_eq!(params(2.5, 1e-4).phi(0.0, a).unwrap(), 0.0);
        }
        assert!(params(2.5, 1e-4).phi(-1.0, 0.0).is_err());
    }

    #[test]
    fn phi_closed_form_matches_quadrature() {
        for p in [1.5, 2.0, 2.5, 3.0] {
            for d in [1e-4, 0.3, 2.0] {
                for t in [0.05, 0.7, 4.0] {
                    let closed = phi_closed_or_quadrature(p, d, t);
                    let quad = phi_quadrature(p, d, t);
                    assert!(((closed - quad) / quad).abs() < 1e-11, "p={p} d={d} t={t}");
                }
            }
        }
    }

    #[test]
    fn f_maps_examples() {
        let a = Tensor2::new(1.0, 2.0, 0.0, -1.0);
        let lin = params(2.0, 0.4);
        assert_eq!(lin.f_map(&a), a.sym());
        assert_eq!(lin.f_star_map(&a), a.sym());
        assert_eq!(params(2.5, 1e-4).f_map(&Tensor2::ZERO), Tensor2::ZERO);
        let m = params(3.0, 0.0);
        let e = Tensor2::diag(1.0, 0.0);
        assert!((m.f_map(&e) - e).norm() < 1e-15);
        assert!((m.f_star_map(&e) - e).norm() < 1e-15);
    }

    #[test]
    fn jacobian_at_origin() {
        let m = params(1.5, 0.0);
        assert!(matches!(m.stress_jacobian(&Tensor2::ZERO), Err(Error::SingularStress { .. })));
        let m = params(1.5, 0.01);
        let j = m.stress_jacobian(&Tensor2::ZERO).unwrap();
        let b = Tensor2::new(1.0, 0.0, 0.0, 0.0);
        assert!((apply4(&j, &b).0[0] - 0.01f64.powf(-0.5)).abs() < 1e-9);
    }

    #[test]
    fn shift_derivative_matches_difference_quotient() {
        let m = params(2.5, 1e-3);
        let a = Tensor2::new(0.3, -0.2, 0.5, 0.1);
        let h = 1e-6;
        let fd = (m.shifted_stress(&a, 0.2 + h) - m.shifted_stress(&a, 0.2 - h)).scale(0.5 / h);
        assert!((fd - m.shifted_stress_shift_derivative(&a, 0.2)).norm() < 1e-8);
    }

    #[test]
    fn validation() {
        assert!(params(1.0, 0.1).validate().is_err());
        assert!(params(2.0, -1.0).validate().is_err());
        assert!(params(2.5, 1e-4).validate().is_ok());
    }
}
