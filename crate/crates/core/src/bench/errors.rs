//! The parabolic error quantities and experimental orders of convergence.

use super::manufactured::{BoundaryData, ManufacturedCase};
use crate::dgcalc::TENSOR;
use crate::forms::{Assembler, BoundaryDatum};
use crate::rothe::Trajectory;
use crate::tensor::Tensor2;
use crate::Result;

/// Error quantities of one trajectory against the exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorQuantities {
    /// `(Σ_k τ ‖F(Dv(t_k)) - F(𝒟_h v^k)‖²)^{1/2}`
    pub e_f: f64,
    /// `(Σ_k τ Σ_f ∫_f h φ_a(h⁻¹ |[[(v(t_k) - v^k) ⊗ n]]|))^{1/2}`
    pub e_jump: f64,
    /// `(Σ_k τ ‖F*(S(Dv(t_k))) - F*(Π_h S(𝒟_h v^k))‖²)^{1/2}`
    pub e_fstar: f64,
    /// `max_k ‖v(t_k) - v^k‖`
    pub e_l2: f64,
    /// `(Σ_k τ ‖q(t_k) - q^k‖_{p'}^{p'})^{1/p'}`
    pub e_q: f64,
}

impl ErrorQuantities {
    pub fn as_array(&self) -> [f64; 5] {
        [self.e_f, self.e_jump, self.e_fstar, self.e_l2, self.e_q]
    }
}

/// Evaluate all five error quantities, sampling at every node `t_k`,
/// `k = 0..=K`, with weight `τ`.
pub fn error_quantities(assembler: &Assembler, traj: &Trajectory, case: &ManufacturedCase) -> Result<ErrorQuantities> {
    let calc = &assembler.calc;
    let params = &assembler.params;
    let n = calc.n_funcs();
    let nq = calc.refb.n_points();
    let mesh = assembler.mesh();
    let pc = params.p_conjugate();
    let h = calc.h;
    let mut sum_f = 0.0;
    let mut sum_jump = 0.0;
    let mut sum_fstar = 0.0;
    let mut max_l2: f64 = 0.0;
    let mut sum_q = 0.0;
    let mut proj = vec![0.0; TENSOR * n];
    let mut stresses = vec![Tensor2::ZERO; nq];
    for k in 0..=traj.n_steps() {
        let t = traj.time(k);
        let v = traj.velocity(k);
        let q = traj.pressure(k);
        let datum = match case.boundary_data {
            BoundaryData::Exact => Some(BoundaryDatum::new(calc, |x| case.exact_velocity(t, x))),
            BoundaryData::Zero => None,
        };
        let state = assembler.element_state(v, datum.as_ref(), false);
        let (mut ef, mut efs, mut el2, mut eq) = (0.0, 0.0, 0.0, 0.0);
        for e in 0..calc.n_elements() {
            let geom = &calc.geoms[e];
            let tri = mesh.triangles()[e];
            for (qi, s) in stresses.iter_mut().enumerate() {
                *s = params.stress(&state.grads[e * nq + qi]);
            }
            // Π_h S(𝒟_h v): the mass matrix scales with det, the load too.
            proj.iter_mut().for_each(|x| *x = 0.0);
            for r in 0..TENSOR {
                for m in 0..n {
                    let load: f64 = (0..nq)
                        .map(|qi| calc.refb.rule.weights[qi] * calc.refb.values_at(qi)[m] * stresses[qi].0[r])
                        .sum();
                    for mm in 0..n {
                        proj[r * n + mm] += calc.refb.mass_inv[mm * n + m] * load;
                    }
                }
            }
            for qi in 0..nq {
                let x = geom.to_physical(calc.refb.rule.reference_point(qi));
                let w = calc.refb.rule.weights[qi] * geom.det;
                let phi = calc.refb.values_at(qi);
                let grad = case.velocity_gradient(t, x)?;
                let gh = &state.grads[e * nq + qi];
                ef += w * (params.f_map(&grad) - params.f_map(gh)).norm().powi(2);
                let mut ps = [0.0; 4];
                for (r, pr) in ps.iter_mut().enumerate() {
                    *pr = (0..n).map(|m| phi[m] * proj[r * n + m]).sum();
                }
                let exact_s = params.stress(&grad);
                efs += w * (params.f_star_map(&exact_s) - params.f_star_map(&Tensor2(ps))).norm().powi(2);
                let ve = case.exact_velocity(t, x);
                let mut vh = [0.0; 2];
                for (c, vc) in vh.iter_mut().enumerate() {
                    *vc = (0..n).map(|a| phi[a] * v[calc.dof(e, c, a)]).sum();
                }
                el2 += w * ((ve[0] - vh[0]).powi(2) + (ve[1] - vh[1]).powi(2));
                let lam = calc.refb.rule.points[qi];
                let qh: f64 = (0..3).map(|i| lam[i] * q[tri[i]]).sum();
                eq += w * (case.exact_pressure(t, x) - qh).abs().powf(pc);
            }
        }
        let mut ej = 0.0;
        for (f, face) in calc.faces.iter().enumerate() {
            let shift = assembler.face_shift(f, v, &state);
            for qi in 0..face.n_points() {
                let pl = &face.phi_left[qi * n..(qi + 1) * n];
                let mut jump = [0.0; 2];
                for (c, jc) in jump.iter_mut().enumerate() {
                    let vl: f64 = (0..n).map(|a| pl[a] * v[calc.dof(face.left, c, a)]).sum();
                    *jc = match face.right {
                        Some(r) => {
                            let pr = &face.phi_right[qi * n..(qi + 1) * n];
                            let vr: f64 = (0..n).map(|a| pr[a] * v[calc.dof(r, c, a)]).sum();
                            vr - vl
                        }
                        None => case.exact_velocity(t, face.points[qi])[c] - vl,
                    };
                }
                let mag = (jump[0] * jump[0] + jump[1] * jump[1]).sqrt();
                ej += face.weights[qi] * h * params.phi(mag / h, shift)?;
            }
        }
        let tau = traj.tau;
        sum_f += tau * ef;
        sum_fstar += tau * efs;
        sum_jump += tau * ej;
        sum_q += tau * eq;
        max_l2 = max_l2.max(el2.sqrt());
    }
    Ok(ErrorQuantities {
        e_f: sum_f.sqrt(),
        e_jump: sum_jump.sqrt(),
        e_fstar: sum_fstar.sqrt(),
        e_l2: max_l2,
        e_q: sum_q.powf(1.0 / pc),
    })
}

/// `log(e_next / e_prev) / log(s_next / s_prev)`; `None` when undefined.
pub fn eoc(e_prev: f64, e_next: f64, scale_prev: f64, scale_next: f64) -> Option<f64> {
    if !(e_prev > 0.0 && e_next > 0.0 && scale_prev > 0.0 && scale_next > 0.0) || scale_prev == scale_next {
        return None;
    }
    let r = (e_next / e_prev).ln() / (scale_next / scale_prev).ln();
    r.is_finite().then_some(r)
}
