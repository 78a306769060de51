use super::{Assembler, ElementState, SparseSystem};
use crate::dgcalc::TENSOR;

impl Assembler {
    /// `½ (z ⊗ v, G_h v) - ½ (v ⊗ v, G_h z)`.
    pub(crate) fn add_convective_ii(&self, v: &[f64], state: &ElementState, sys: &mut SparseSystem) {
        let calc = &self.calc;
        let n = calc.n_funcs();
        let nq = calc.refb.n_points();
        let mut res = Vec::new();
        let mut jac = Vec::new();
        for e in 0..calc.n_elements() {
            let ns = calc.n_cols(e);
            let dofs = calc.stencil_dofs(e);
            let with_jac = sys.jacobian.is_some();
            res.clear();
            res.resize(ns, 0.0);
            if with_jac {
                jac.clear();
                jac.resize(ns * ns, 0.0);
            }
            let det = calc.geoms[e].det;
            let own = |c: usize, a: usize| v[calc.dof(e, c, a)];
            for q in 0..nq {
                let phi = calc.refb.values_at(q);
                let w = calc.refb.rule.weights[q] * det;
                let mut vq = [0.0; 2];
                for (c, x) in vq.iter_mut().enumerate() {
                    *x = (0..n).map(|a| phi[a] * own(c, a)).sum();
                }
                let g = &state.grads[e * nq + q];
                let gv = g.apply(vq);
                let b = &calc.ops[e].grad[q * TENSOR * ns..(q + 1) * TENSOR * ns];
                let brow = |r: usize| &b[r * ns..(r + 1) * ns];
                for j in 0..2 {
                    for a in 0..n {
                        res[calc.col(0, j, a)] += 0.5 * w * phi[a] * gv[j];
                    }
                }
                for r in 0..TENSOR {
                    let vv = vq[r / 2] * vq[r % 2];
                    for (o, x) in res.iter_mut().zip(brow(r)) {
                        *o -= 0.5 * w * vv * x;
                    }
                }
                if !with_jac {
                    continue;
                }
                // d/dx_t of ½ φ_a (G v)_j: the G part over the stencil, the v part on own dofs.
                for j in 0..2 {
                    let mut bv = vec![0.0; ns];
                    for i in 0..2 {
                        for (o, x) in bv.iter_mut().zip(brow(2 * j + i)) {
                            *o += x * vq[i];
                        }
                    }
                    for a in 0..n {
                        let row = calc.col(0, j, a) * ns;
                        let c = 0.5 * w * phi[a];
                        for (o, x) in jac[row..row + ns].iter_mut().zip(&bv) {
                            *o += c * x;
                        }
                        for i in 0..2 {
                            for bb in 0..n {
                                jac[row + calc.col(0, i, bb)] += c * g.get(j, i) * phi[bb];
                            }
                        }
                    }
                }
                // d/dx_(i,b) of -½ (v ⊗ v) : B z.
                for s in 0..ns {
                    for i in 0..2 {
                        let mut t = 0.0;
                        for l in 0..2 {
                            t += b[(2 * i + l) * ns + s] * vq[l] + vq[l] * b[(2 * l + i) * ns + s];
                        }
                        if t == 0.0 {
                            continue;
                        }
                        for bb in 0..n {
                            jac[s * ns + calc.col(0, i, bb)] -= 0.5 * w * phi[bb] * t;
                        }
                    }
                }
            }
            for (d, r) in dofs.iter().zip(&res) {
                sys.residual[*d] += r;
            }
            if let Some(j) = sys.jacobian.as_mut() {
                j.add_block(&dofs, &dofs, &jac);
            }
        }
    }

    /// Temam-stabilized broken convection with upwind-free face terms.
    pub(crate) fn add_convective_i(&self, v: &[f64], sys: &mut SparseSystem) {
        self.add_convective_i_volume(v, sys);
        self.add_convective_i_faces(v, sys);
    }

    fn add_convective_i_volume(&self, v: &[f64], sys: &mut SparseSystem) {
        let calc = &self.calc;
        let n = calc.n_funcs();
        let block = 2 * n;
        let nq = calc.refb.n_points();
        let mut jac = vec![0.0; block * block];
        let mut dphi = vec![[0.0; 2]; n];
        for e in 0..calc.n_elements() {
            let geom = &calc.geoms[e];
            let own = &v[e * block..(e + 1) * block];
            jac.iter_mut().for_each(|x| *x = 0.0);
            for q in 0..nq {
                let phi = calc.refb.values_at(q);
                for (d, r) in dphi.iter_mut().zip(calc.refb.gradients_at(q)) {
                    *d = geom.push_gradient(*r);
                }
                let w = calc.refb.rule.weights[q] * geom.det;
                let mut vq = [0.0; 2];
                let mut gr = [[0.0; 2]; 2];
                for c in 0..2 {
                    for a in 0..n {
                        vq[c] += phi[a] * own[c * n + a];
                        gr[c][0] += dphi[a][0] * own[c * n + a];
                        gr[c][1] += dphi[a][1] * own[c * n + a];
                    }
                }
                let div = gr[0][0] + gr[1][1];
                for j in 0..2 {
                    let val = gr[j][0] * vq[0] + gr[j][1] * vq[1] + 0.5 * div * vq[j];
                    for a in 0..n {
                        sys.residual[e * block + j * n + a] += w * phi[a] * val;
                    }
                }
                if sys.jacobian.is_none() {
                    continue;
                }
                for j in 0..2 {
                    for a in 0..n {
                        let row = (j * n + a) * block;
                        let c = w * phi[a];
                        for i in 0..2 {
                            for b in 0..n {
                                let adv = dphi[b][0] * vq[0] + dphi[b][1] * vq[1];
                                let mut d = gr[j][i] * phi[b] + 0.5 * dphi[b][i] * vq[j];
                                if i == j {
                                    d += adv + 0.5 * div * phi[b];
                                }
                                jac[row + i * n + b] += c * d;
                            }
                        }
                    }
                }
            }
            if let Some(j) = sys.jacobian.as_mut() {
                let dofs: Vec<usize> = (e * block..(e + 1) * block).collect();
                j.add_block(&dofs, &dofs, &jac);
            }
        }
    }

    fn add_convective_i_faces(&self, v: &[f64], sys: &mut SparseSystem) {
        let calc = &self.calc;
        let n = calc.n_funcs();
        let block = 2 * n;
        let mut rows = Vec::with_capacity(2 * block);
        let mut jac = Vec::new();
        for face in &calc.faces {
            let sides = if face.right.is_some() { 2 } else { 1 };
            let nr = sides * block;
            rows.clear();
            rows.extend(face.left * block..(face.left + 1) * block);
            if let Some(r) = face.right {
                rows.extend(r * block..(r + 1) * block);
            }
            let with_jac = sys.jacobian.is_some();
            if with_jac {
                jac.clear();
                jac.resize(nr * nr, 0.0);
            }
            let nm = face.normal;
            for q in 0..face.n_points() {
                let w = face.weights[q];
                let pl = &face.phi_left[q * n..(q + 1) * n];
                let eval = |e: usize, p: &[f64]| {
                    let mut x = [0.0; 2];
                    for (c, xc) in x.iter_mut().enumerate() {
                        *xc = (0..n).map(|a| p[a] * v[calc.dof(e, c, a)]).sum();
                    }
                    x
                };
                let a = eval(face.left, pl);
                let an = a[0] * nm[0] + a[1] * nm[1];
                let Some(right) = face.right else {
                    // -½ (a·n)(a·z)
                    for j in 0..2 {
                        for c in 0..n {
                            sys.residual[rows[j * n + c]] -= 0.5 * w * an * a[j] * pl[c];
                        }
                    }
                    if with_jac {
                        for j in 0..2 {
                            for c in 0..n {
                                for i in 0..2 {
                                    let mut d = nm[i] * a[j];
                                    if i == j {
                                        d += an;
                                    }
                                    for b in 0..n {
                                        jac[(j * n + c) * nr + i * n + b] -= 0.5 * w * pl[c] * d * pl[b];
                                    }
                                }
                            }
                        }
                    }
                    continue;
                };
                let pr = &face.phi_right[q * n..(q + 1) * n];
                let b = eval(right, pr);
                let d = [a[0] - b[0], a[1] - b[1]];
                let dn = d[0] * nm[0] + d[1] * nm[1];
                let u = 0.5 * (a[0] * a[0] + a[1] * a[1] - b[0] * b[0] - b[1] * b[1]);
                let phis = |side: usize| if side == 0 { pl } else { pr };
                for side in 0..2 {
                    let p = phis(side);
                    let own = if side == 0 { a } else { b };
                    for j in 0..2 {
                        for c in 0..n {
                            let t1 = -0.5 * u * nm[j] * p[c];
                            let t2 = -0.25 * dn * own[j] * p[c];
                            sys.residual[rows[side * block + j * n + c]] += w * (t1 + t2);
                        }
                    }
                }
                if !with_jac {
                    continue;
                }
                for side in 0..2 {
                    let p = phis(side);
                    for j in 0..2 {
                        for c in 0..n {
                            let row = (side * block + j * n + c) * nr;
                            for i in 0..2 {
                                let mut da = -0.5 * nm[j] * a[i];
                                let mut db = 0.5 * nm[j] * b[i];
                                if side == 0 {
                                    da -= 0.25 * nm[i] * a[j];
                                    db += 0.25 * nm[i] * a[j];
                                    if i == j {
                                        da -= 0.25 * dn;
                                    }
                                } else {
                                    da -= 0.25 * nm[i] * b[j];
                                    db += 0.25 * nm[i] * b[j];
                                    if i == j {
                                        db -= 0.25 * dn;
                                    }
                                }
                                for bb in 0..n {
                                    jac[row + i * n + bb] += w * p[c] * da * pl[bb];
                                    jac[row + block + i * n + bb] += w * p[c] * db * pr[bb];
                                }
                            }
                        }
                    }
                }
            }
            if let Some(j) = sys.jacobian.as_mut() {
                j.add_block(&rows, &rows, &jac);
            }
        }
    }
}
