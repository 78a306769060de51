use super::{Assembler, BoundaryDatum, ElementState, SparseSystem};
use crate::constitutive::{FaceShift, ShiftLinearization};
use crate::dgcalc::TENSOR;
use crate::tensor::{Tensor2, Tensor4};
use crate::Result;

impl Assembler {
    /// `(S(𝒟_h v), 𝒟_h z)` with the exact Jacobian `Bᵀ C B`.
    pub(super) fn add_stress_volume(&self, state: &ElementState, sys: &mut SparseSystem) -> Result<()> {
        let calc = &self.calc;
        let nq = calc.refb.n_points();
        let mut res = Vec::new();
        let mut jac = Vec::new();
        let mut cb = Vec::new();
        for e in 0..calc.n_elements() {
            let ns = calc.n_cols(e);
            let dofs = calc.stencil_dofs(e);
            res.clear();
            res.resize(ns, 0.0);
            let with_jac = sys.jacobian.is_some();
            if with_jac {
                jac.clear();
                jac.resize(ns * ns, 0.0);
            }
            let det = calc.geoms[e].det;
            for q in 0..nq {
                let g = &state.grads[e * nq + q];
                let w = calc.refb.rule.weights[q] * det;
                let s = self.params.stress(g);
                for r in 0..TENSOR {
                    let c = w * s.0[r];
                    if c != 0.0 {
                        for (o, b) in res.iter_mut().zip(calc.gradient_row(e, q, r)) {
                            *o += c * b;
                        }
                    }
                }
                if with_jac {
                    let cm = self.params.stress_jacobian(g)?;
                    accumulate_btcb(&calc.ops[e].grad[q * TENSOR * ns..(q + 1) * TENSOR * ns], &cm, w, ns, &mut cb, &mut jac);
                }
            }
            for (d, r) in dofs.iter().zip(&res) {
                sys.residual[*d] += r;
            }
            if let Some(j) = sys.jacobian.as_mut() {
                j.add_block(&dofs, &dofs, &jac);
            }
        }
        Ok(())
    }

    /// Shift of the penalty flux on face `f`.
    pub(crate) fn face_shift(&self, f: usize, v: &[f64], state: &ElementState) -> f64 {
        let face = &self.calc.faces[f];
        match self.params.face_shift {
            FaceShift::ElementMeans => match face.right {
                Some(r) => 0.5 * (state.means[face.left] + state.means[r]),
                None => state.means[face.left],
            },
            FaceShift::FaceQuadrature => {
                let mut total = 0.0;
                for (q, (x, w)) in face.points.iter().zip(&face.weights).enumerate() {
                    let l = self.sym_gradient_norm_at(face.left, *x, &face.phi_left, q, v, state);
                    let r = match face.right {
                        Some(r) => self.sym_gradient_norm_at(r, *x, &face.phi_right, q, v, state),
                        None => l,
                    };
                    total += w * 0.5 * (l + r);
                }
                total / face.length
            }
        }
    }

    /// `|𝒟_h v|` at a face point `x` seen from element `e`.
    fn sym_gradient_norm_at(&self, e: usize, x: [f64; 2], phi: &[f64], q: usize, v: &[f64], state: &ElementState) -> f64 {
        let calc = &self.calc;
        let n = calc.n_funcs();
        let geom = &calc.geoms[e];
        let mut dphi = vec![[0.0; 2]; n];
        calc.refb.basis.gradients(geom.to_reference(x), &mut dphi);
        let phi = &phi[q * n..(q + 1) * n];
        let lifts = &state.lifts[e * TENSOR * n..(e + 1) * TENSOR * n];
        let mut g = [0.0; 4];
        for j in 0..2 {
            for a in 0..n {
                let pg = geom.push_gradient(dphi[a]);
                let c = v[calc.dof(e, j, a)];
                g[2 * j] += pg[0] * c;
                g[2 * j + 1] += pg[1] * c;
            }
        }
        for (r, gr) in g.iter_mut().enumerate() {
            *gr -= phi.iter().zip(&lifts[r * n..(r + 1) * n]).map(|(a, b)| a * b).sum::<f64>();
        }
        Tensor2(g).sym().norm()
    }

    /// `α ⟨S_a(h⁻¹ [[v ⊗ n]]), [[z ⊗ n]]⟩` over all faces, with the boundary
    /// jump taken against the datum. `shifted` selects the shifted flux of
    /// the LDG scheme; otherwise `a = 0`.
    pub(super) fn add_penalty(
        &self,
        v: &[f64],
        state: &ElementState,
        datum: Option<&BoundaryDatum>,
        shifted: bool,
        sys: &mut SparseSystem,
    ) -> Result<()> {
        let calc = &self.calc;
        let n = calc.n_funcs();
        let h = calc.h;
        let alpha = self.params.alpha;
        let exact = shifted
            && sys.jacobian.is_some()
            && self.params.shift_linearization == ShiftLinearization::Exact
            && self.params.face_shift == FaceShift::ElementMeans;
        let block = 2 * n;
        let mut rows = Vec::with_capacity(2 * block);
        let mut res = Vec::new();
        let mut jac = Vec::new();
        let mut dshift = Vec::new();
        for (f, face) in calc.faces.iter().enumerate() {
            let shift = if shifted { self.face_shift(f, v, state) } else { 0.0 };
            let sides = if face.right.is_some() { 2 } else { 1 };
            let nr = sides * block;
            rows.clear();
            rows.extend((0..block).map(|i| face.left * block + i));
            if let Some(r) = face.right {
                rows.extend((0..block).map(|i| r * block + i));
            }
            res.clear();
            res.resize(nr, 0.0);
            if sys.jacobian.is_some() {
                jac.clear();
                jac.resize(nr * nr, 0.0);
            }
            if exact {
                dshift.clear();
                dshift.resize(nr, 0.0);
            }
            let nrm = face.normal;
            for q in 0..face.n_points() {
                let pl = &face.phi_left[q * n..(q + 1) * n];
                let pr = if face.right.is_some() { &face.phi_right[q * n..(q + 1) * n] } else { &[][..] };
                let mut jv = [0.0; 2];
                for (c, jc) in jv.iter_mut().enumerate() {
                    *jc = (0..n).map(|a| pl[a] * v[calc.dof(face.left, c, a)]).sum();
                    match face.right {
                        Some(r) => *jc -= (0..n).map(|a| pr[a] * v[calc.dof(r, c, a)]).sum::<f64>(),
                        None => {
                            if let Some(d) = datum {
                                *jc -= d.face_values[f][q][c];
                            }
                        }
                    }
                }
                let a = Tensor2::outer(jv, nrm).scale(1.0 / h);
                let s = self.params.shifted_stress(&a, shift);
                let sn = s.apply(nrm);
                let w = alpha * face.weights[q];
                let phis = |side: usize, i: usize| if side == 0 { pl[i] } else { pr[i] };
                let sign = |side: usize| if side == 0 { 1.0 } else { -1.0 };
                for side in 0..sides {
                    for j in 0..2 {
                        for i in 0..n {
                            res[side * block + j * n + i] += sign(side) * w * phis(side, i) * sn[j];
                        }
                    }
                }
                if sys.jacobian.is_some() {
                    let cm = self.params.shifted_stress_jacobian(&a, shift)?;
                    let m = normal_contraction(&cm, nrm);
                    for s1 in 0..sides {
                        for s2 in 0..sides {
                            let sg = sign(s1) * sign(s2) * w / h;
                            for j in 0..2 {
                                for jj in 0..2 {
                                    let mjj = sg * m[j][jj];
                                    if mjj == 0.0 {
                                        continue;
                                    }
                                    for i in 0..n {
                                        let row = (s1 * block + j * n + i) * nr + s2 * block + jj * n;
                                        let c = mjj * phis(s1, i);
                                        for b in 0..n {
                                            jac[row + b] += c * phis(s2, b);
                                        }
                                    }
                                }
                            }
                        }
                    }
                    if exact {
                        let dsn = self.params.shifted_stress_shift_derivative(&a, shift).apply(nrm);
                        for side in 0..sides {
                            for j in 0..2 {
                                for i in 0..n {
                                    dshift[side * block + j * n + i] += sign(side) * w * phis(side, i) * dsn[j];
                                }
                            }
                        }
                    }
                }
            }
            for (r, x) in rows.iter().zip(&res) {
                sys.residual[*r] += x;
            }
            if let Some(jm) = sys.jacobian.as_mut() {
                jm.add_block(&rows, &rows, &jac);
                if exact {
                    let owners: Vec<(usize, f64)> = match face.right {
                        Some(r) => vec![(face.left, 0.5), (r, 0.5)],
                        None => vec![(face.left, 1.0)],
                    };
                    for (k, weight) in owners {
                        let cols = calc.stencil_dofs(k);
                        let dm = &state.mean_derivatives[k];
                        let mut blk = vec![0.0; nr * cols.len()];
                        for (i, t) in dshift.iter().enumerate() {
                            for (c, d) in dm.iter().enumerate() {
                                blk[i * cols.len() + c] = t * weight * d;
                            }
                        }
                        jm.add_block(&rows, &cols, &blk);
                    }
                }
            }
        }
        Ok(())
    }

    /// `-(S(R_h v - R_∂ g), R_h z)` of the symmetric interior penalty form.
    pub(super) fn add_sip_lifting(&self, state: &ElementState, sys: &mut SparseSystem) -> Result<()> {
        let calc = &self.calc;
        let n = calc.n_funcs();
        let nq = calc.refb.n_points();
        let mut res = Vec::new();
        let mut jac = Vec::new();
        let mut cb = Vec::new();
        let mut rop = Vec::new();
        for e in 0..calc.n_elements() {
            let ns = calc.n_cols(e);
            let dofs = calc.stencil_dofs(e);
            let lifts = &state.lifts[e * TENSOR * n..(e + 1) * TENSOR * n];
            let lift_map = &calc.ops[e].lift;
            res.clear();
            res.resize(ns, 0.0);
            let with_jac = sys.jacobian.is_some();
            if with_jac {
                jac.clear();
                jac.resize(ns * ns, 0.0);
            }
            let det = calc.geoms[e].det;
            for q in 0..nq {
                let phi = calc.refb.values_at(q);
                let mut reff = [0.0; 4];
                rop.clear();
                rop.resize(TENSOR * ns, 0.0);
                for r in 0..TENSOR {
                    reff[r] = phi.iter().zip(&lifts[r * n..(r + 1) * n]).map(|(a, b)| a * b).sum();
                    let out = &mut rop[r * ns..(r + 1) * ns];
                    for m in 0..n {
                        for (o, l) in out.iter_mut().zip(&lift_map[(r * n + m) * ns..(r * n + m + 1) * ns]) {
                            *o += phi[m] * l;
                        }
                    }
                }
                let reff = Tensor2(reff);
                let w = calc.refb.rule.weights[q] * det;
                let s = self.params.stress(&reff);
                for r in 0..TENSOR {
                    let c = w * s.0[r];
                    for (o, b) in res.iter_mut().zip(&rop[r * ns..(r + 1) * ns]) {
                        *o -= c * b;
                    }
                }
                if with_jac {
                    let cm = self.params.stress_jacobian(&reff)?;
                    accumulate_btcb(&rop, &cm, -w, ns, &mut cb, &mut jac);
                }
            }
            for (d, r) in dofs.iter().zip(&res) {
                sys.residual[*d] += r;
            }
            if let Some(j) = sys.jacobian.as_mut() {
                j.add_block(&dofs, &dofs, &jac);
            }
        }
        Ok(())
    }
}

/// `M_{jj'} = Σ_{k,k'} n_k C[2j+k][2j'+k'] n_{k'}`.
fn normal_contraction(c: &Tensor4, n: [f64; 2]) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for (j, mj) in m.iter_mut().enumerate() {
        for (jj, mjj) in mj.iter_mut().enumerate() {
            for k in 0..2 {
                for kk in 0..2 {
                    *mjj += n[k] * c[2 * j + k][2 * jj + kk] * n[kk];
                }
            }
        }
    }
    m
}

/// `jac += w Bᵀ C B` for the row-major `TENSOR x ns` operator `B`.
fn accumulate_btcb(b: &[f64], c: &Tensor4, w: f64, ns: usize, cb: &mut Vec<f64>, jac: &mut [f64]) {
    cb.clear();
    cb.resize(TENSOR * ns, 0.0);
    for r in 0..TENSOR {
        for rr in 0..TENSOR {
            let crr = w * c[r][rr];
            if crr == 0.0 {
                continue;
            }
            for (o, x) in cb[r * ns..(r + 1) * ns].iter_mut().zip(&b[rr * ns..(rr + 1) * ns]) {
                *o += crr * x;
            }
        }
    }
    for r in 0..TENSOR {
        let cbr = &cb[r * ns..(r + 1) * ns];
        for (s, bs) in b[r * ns..(r + 1) * ns].iter().enumerate() {
            if *bs == 0.0 {
                continue;
            }
            for (o, x) in jac[s * ns..(s + 1) * ns].iter_mut().zip(cbr) {
                *o += bs * x;
            }
        }
    }
}
