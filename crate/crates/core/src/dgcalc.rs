//! Jumps, averages, lifting operators, the DG gradient and divergence, and
//! DG norms on broken `P_ℓ` vector fields.
//!
//! For every element `K` the lifting `R_h w` restricted to `K` depends only
//! on the values of `w` on `K` and its face neighbors, its *stencil*. The
//! map from stencil coefficients to the lifted coefficients on `K` is stored
//! as a dense matrix, together with the DG gradient evaluated at every
//! volume quadrature point of `K`.

use crate::elements::{gauss_legendre_unit, ElementGeometry, ReferenceBasis};
use crate::mesh::{FaceKind, Mesh};
use crate::spaces::BrokenField;
use crate::tensor::Tensor2;
use crate::{Error, Result};

/// Number of tensor components of a 2x2 field.
pub const TENSOR: usize = 4;

/// Quadrature data of one face, with basis values of both adjacent
/// elements at the face points.
#[derive(Debug, Clone)]
pub struct FaceData {
    pub left: usize,
    pub right: Option<usize>,
    /// Unit normal pointing out of `left`.
    pub normal: [f64; 2],
    pub length: f64,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// `phi_left[q * n + i]`
    pub phi_left: Vec<f64>,
    pub phi_right: Vec<f64>,
}

impl FaceData {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }

    pub fn n_points(&self) -> usize {
        self.weights.len()
    }
}

/// Lifting and DG gradient of one element as linear maps of its stencil
/// coefficients.
#[derive(Debug, Clone)]
pub struct ElementOperator {
    /// The element itself first, then its face neighbors.
    pub stencil: Vec<usize>,
    /// Row-major `(TENSOR * n) x ns` map onto the lifted coefficients,
    /// row `r * n + m` for tensor component `r` and basis function `m`.
    pub lift: Vec<f64>,
    /// `grad[(q * TENSOR + r) * ns + s]`: the DG gradient at volume point `q`.
    pub grad: Vec<f64>,
}

/// Precomputed DG calculus on a fixed mesh.
#[derive(Debug, Clone)]
pub struct DgCalculus {
    mesh: Mesh,
    pub refb: ReferenceBasis,
    pub geoms: Vec<ElementGeometry>,
    pub faces: Vec<FaceData>,
    pub ops: Vec<ElementOperator>,
    /// Global mesh size used in penalties and norms.
    pub h: f64,
}

impl DgCalculus {
    /// `face_points` Gauss-Legendre points per face (exact for degree
    /// `2 face_points - 1`).
    pub fn new(mesh: Mesh, ell: usize, volume_degree: usize, face_points: usize) -> Result<Self> {
        if face_points == 0 {
            return Err(Error::InvalidArgument("face rule needs at least one point".into()));
        }
        let refb = ReferenceBasis::new(ell, volume_degree)?;
        let geoms = (0..mesh.n_triangles())
            .map(|t| ElementGeometry::new(mesh.triangle_vertices(t), t))
            .collect::<Result<Vec<_>>>()?;
        let n = refb.n_funcs();
        let (gs, gw) = gauss_legendre_unit(face_points);
        let mut faces = Vec::with_capacity(mesh.faces().len());
        let mut phi = vec![0.0; n];
        for f in mesh.faces() {
            let a = mesh.vertices()[f.vertices[0]];
            let b = mesh.vertices()[f.vertices[1]];
            let points: Vec<[f64; 2]> = gs
                .iter()
                .map(|s| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
                .collect();
            let weights: Vec<f64> = gw.iter().map(|w| w * f.length).collect();
            let tabulate = |e: usize, phi: &mut [f64]| -> Vec<f64> {
                let mut out = Vec::with_capacity(points.len() * n);
                for x in &points {
                    refb.basis.values(geoms[e].to_reference(*x), phi);
                    out.extend_from_slice(phi);
                }
                out
            };
            let phi_left = tabulate(f.first(), &mut phi);
            let phi_right = f.second().map(|r| tabulate(r, &mut phi)).unwrap_or_default();
            faces.push(FaceData {
                left: f.first(),
                right: f.second(),
                normal: f.normal,
                length: f.length,
                points,
                weights,
                phi_left,
                phi_right,
            });
        }
        let mut calc = Self {
            h: mesh.h_max(),
            mesh,
            refb,
            geoms,
            faces,
            ops: Vec::new(),
        };
        calc.ops = (0..calc.mesh.n_triangles()).map(|e| calc.build_operator(e)).collect();
        Ok(calc)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn n_funcs(&self) -> usize {
        self.refb.n_funcs()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_triangles()
    }

    /// Number of velocity coefficients.
    pub fn n_velocity_dofs(&self) -> usize {
        self.n_elements() * 2 * self.n_funcs()
    }

    /// Global index of velocity coefficient `(element, component, func)`.
    #[inline]
    pub fn dof(&self, element: usize, component: usize, func: usize) -> usize {
        (element * 2 + component) * self.n_funcs() + func
    }

    /// Stencil column of `(slot, component, func)`.
    #[inline]
    pub fn col(&self, slot: usize, component: usize, func: usize) -> usize {
        (slot * 2 + component) * self.n_funcs() + func
    }

    /// Number of stencil columns of element `e`.
    pub fn n_cols(&self, e: usize) -> usize {
        self.ops[e].stencil.len() * 2 * self.n_funcs()
    }

    /// Global dof of every stencil column of `e`.
    pub fn stencil_dofs(&self, e: usize) -> Vec<usize> {
        let block = 2 * self.n_funcs();
        self.ops[e]
            .stencil
            .iter()
            .flat_map(|&k| (0..block).map(move |i| k * block + i))
            .collect()
    }

    /// Copy the stencil coefficients of `e` out of a global velocity vector.
    pub fn gather(&self, e: usize, v: &[f64], out: &mut Vec<f64>) {
        let block = 2 * self.n_funcs();
        out.clear();
        for &k in &self.ops[e].stencil {
            out.extend_from_slice(&v[k * block..(k + 1) * block]);
        }
    }

    pub fn slot_of(&self, e: usize, neighbor: usize) -> usize {
        self.ops[e]
            .stencil
            .iter()
            .position(|&k| k == neighbor)
            .expect("neighbor belongs to the stencil")
    }

    fn build_operator(&self, e: usize) -> ElementOperator {
        let n = self.n_funcs();
        let mut stencil = vec![e];
        stencil.extend(self.mesh.neighbors(e).iter().flatten());
        let ns = stencil.len() * 2 * n;
        let geom = &self.geoms[e];
        let mut rhs = vec![0.0; TENSOR * n * ns];
        let mut phi_k = vec![0.0; n];
        let mut phi_n = vec![0.0; n];
        for f in self.mesh.triangle_faces(e) {
            let face = &self.faces[f];
            let normal = self.mesh.outward_normal(e, f);
            let (omega, other) = match self.mesh.faces()[f].kind {
                FaceKind::Interior { left, right } => (0.5, Some(if left == e { right } else { left })),
                FaceKind::Boundary { .. } => (1.0, None),
            };
            let slot = other.map(|o| stencil.iter().position(|&k| k == o).unwrap());
            for (x, w) in face.points.iter().zip(&face.weights) {
                self.refb.basis.values(geom.to_reference(*x), &mut phi_k);
                if let Some(o) = other {
                    self.refb.basis.values(self.geoms[o].to_reference(*x), &mut phi_n);
                }
                for j in 0..2 {
                    for k in 0..2 {
                        let r = 2 * j + k;
                        for m in 0..n {
                            let row = (r * n + m) * ns;
                            let c = omega * w * phi_k[m] * normal[k];
                            for a in 0..n {
                                rhs[row + self.col(0, j, a)] += c * phi_k[a];
                                if let Some(s) = slot {
                                    rhs[row + self.col(s, j, a)] -= c * phi_n[a];
                                }
                            }
                        }
                    }
                }
            }
        }
        let mut lift = vec![0.0; TENSOR * n * ns];
        for r in 0..TENSOR {
            for m in 0..n {
                for mm in 0..n {
                    let c = self.refb.mass_inv[m * n + mm] / geom.det;
                    if c == 0.0 {
                        continue;
                    }
                    for s in 0..ns {
                        lift[(r * n + m) * ns + s] += c * rhs[(r * n + mm) * ns + s];
                    }
                }
            }
        }
        let nq = self.refb.n_points();
        let mut grad = vec![0.0; nq * TENSOR * ns];
        for q in 0..nq {
            let phi = self.refb.values_at(q);
            let dphi = self.refb.gradients_at(q);
            for j in 0..2 {
                for k in 0..2 {
                    let r = 2 * j + k;
                    let row = &mut grad[(q * TENSOR + r) * ns..(q * TENSOR + r + 1) * ns];
                    for a in 0..n {
                        row[self.col(0, j, a)] += geom.push_gradient(dphi[a])[k];
                    }
                    for m in 0..n {
                        let lrow = &lift[(r * n + m) * ns..(r * n + m + 1) * ns];
                        for (g, l) in row.iter_mut().zip(lrow) {
                            *g -= phi[m] * l;
                        }
                    }
                }
            }
        }
        ElementOperator { stencil, lift, grad }
    }

    /// The DG gradient at volume point `q` of `e` given the stencil
    /// coefficients.
    #[inline]
    pub fn gradient_at(&self, e: usize, q: usize, local: &[f64]) -> Tensor2 {
        let ns = local.len();
        let g = &self.ops[e].grad[q * TENSOR * ns..(q + 1) * TENSOR * ns];
        let mut out = [0.0; 4];
        for (r, o) in out.iter_mut().enumerate() {
            *o = g[r * ns..(r + 1) * ns].iter().zip(local).map(|(a, b)| a * b).sum();
        }
        Tensor2(out)
    }

    /// Row `r` of the DG gradient map at volume point `q` of `e`.
    #[inline]
    pub fn gradient_row(&self, e: usize, q: usize, r: usize) -> &[f64] {
        let ns = self.n_cols(e);
        &self.ops[e].grad[(q * TENSOR + r) * ns..(q * TENSOR + r + 1) * ns]
    }

    /// The broken gradient `∇_h` at volume point `q` of `e` from the
    /// element's own coefficients.
    pub fn local_gradient_at(&self, e: usize, q: usize, own: &[f64]) -> Tensor2 {
        let n = self.n_funcs();
        let dphi = self.refb.gradients_at(q);
        let mut out = [0.0; 4];
        for j in 0..2 {
            for a in 0..n {
                let g = self.geoms[e].push_gradient(dphi[a]);
                out[2 * j] += g[0] * own[j * n + a];
                out[2 * j + 1] += g[1] * own[j * n + a];
            }
        }
        Tensor2(out)
    }

    /// Lifted coefficients of `e` (length `TENSOR * n`) from its stencil
    /// coefficients.
    pub fn lift_local(&self, e: usize, local: &[f64]) -> Vec<f64> {
        let ns = local.len();
        self.ops[e]
            .lift
            .chunks(ns)
            .map(|row| row.iter().zip(local).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `R_h w` as a broken tensor field; with `symmetric` its symmetric part.
    pub fn lift(&self, w: &BrokenField, symmetric: bool) -> Result<BrokenField> {
        self.check_vector(w)?;
        let n = self.n_funcs();
        let mut out = BrokenField::zeros(self.n_elements(), TENSOR, n);
        let mut local = Vec::new();
        for e in 0..self.n_elements() {
            self.gather(e, &w.coeffs, &mut local);
            let l = self.lift_local(e, &local);
            for r in 0..TENSOR {
                out.local_mut(e, r).copy_from_slice(&l[r * n..(r + 1) * n]);
            }
            if symmetric {
                symmetrize_element(&mut out, e);
            }
        }
        Ok(out)
    }

    /// Lifting of boundary data `g`: the field `R_∂ g` with
    /// `(R_∂ g, X) = ⟨g ⊗ n, X⟩_{∂Ω}` for all broken tensor `X`.
    pub fn boundary_lift<G>(&self, g: G) -> BrokenField
    where
        G: Fn([f64; 2]) -> [f64; 2],
    {
        let n = self.n_funcs();
        let mut out = BrokenField::zeros(self.n_elements(), TENSOR, n);
        for face in self.faces.iter().filter(|f| f.is_boundary()) {
            let e = face.left;
            let det = self.geoms[e].det;
            let mut rhs = vec![0.0; TENSOR * n];
            for (q, (x, w)) in face.points.iter().zip(&face.weights).enumerate() {
                let gv = g(*x);
                let phi = &face.phi_left[q * n..(q + 1) * n];
                for j in 0..2 {
                    for k in 0..2 {
                        for m in 0..n {
                            rhs[(2 * j + k) * n + m] += w * phi[m] * gv[j] * face.normal[k];
                        }
                    }
                }
            }
            for r in 0..TENSOR {
                let loc = out.local_mut(e, r);
                for m in 0..n {
                    loc[m] += (0..n).map(|mm| self.refb.mass_inv[m * n + mm] * rhs[r * n + mm]).sum::<f64>() / det;
                }
            }
        }
        out
    }

    /// `G_h w = ∇_h w - R_h w` as a broken tensor field of degree `ℓ`.
    pub fn dg_gradient(&self, w: &BrokenField) -> Result<BrokenField> {
        let mut out = self.broken_gradient(w)?;
        out.axpy(-1.0, &self.lift(w, false)?);
        Ok(out)
    }

    /// `𝒟_h w = [G_h w]^sym`.
    pub fn sym_dg_gradient(&self, w: &BrokenField) -> Result<BrokenField> {
        let mut g = self.dg_gradient(w)?;
        for e in 0..self.n_elements() {
            symmetrize_element(&mut g, e);
        }
        Ok(g)
    }

    /// `Div_h w = tr G_h w` as a broken scalar field.
    pub fn dg_divergence(&self, w: &BrokenField) -> Result<BrokenField> {
        let g = self.dg_gradient(w)?;
        let n = self.n_funcs();
        let mut out = BrokenField::zeros(self.n_elements(), 1, n);
        for e in 0..self.n_elements() {
            for m in 0..n {
                out.local_mut(e, 0)[m] = g.local(e, 0)[m] + g.local(e, 3)[m];
            }
        }
        Ok(out)
    }

    /// The broken gradient `∇_h w`, interpolated at the Lagrange nodes
    /// (exact, since it has degree `ℓ - 1`).
    pub fn broken_gradient(&self, w: &BrokenField) -> Result<BrokenField> {
        self.check_vector(w)?;
        let n = self.n_funcs();
        let mut out = BrokenField::zeros(self.n_elements(), TENSOR, n);
        let mut dphi = vec![[0.0; 2]; n];
        for (node_index, node) in self.refb.basis.nodes().iter().enumerate() {
            self.refb.basis.gradients(*node, &mut dphi);
            for e in 0..self.n_elements() {
                for j in 0..2 {
                    let coeffs = w.local(e, j);
                    let mut g = [0.0; 2];
                    for a in 0..n {
                        let pg = self.geoms[e].push_gradient(dphi[a]);
                        g[0] += pg[0] * coeffs[a];
                        g[1] += pg[1] * coeffs[a];
                    }
                    out.local_mut(e, 2 * j)[node_index] = g[0];
                    out.local_mut(e, 2 * j + 1)[node_index] = g[1];
                }
            }
        }
        Ok(out)
    }

    /// `[[w ⊗ n]]` at the quadrature points of face `f`.
    pub fn jump_at_face(&self, w: &BrokenField, f: usize) -> Vec<Tensor2> {
        let face = &self.faces[f];
        let n = self.n_funcs();
        let mut vl = [0.0; 2];
        let mut vr = [0.0; 2];
        (0..face.n_points())
            .map(|q| {
                w.eval_with(face.left, &face.phi_left[q * n..(q + 1) * n], &mut vl);
                let mut d = vl;
                if let Some(r) = face.right {
                    w.eval_with(r, &face.phi_right[q * n..(q + 1) * n], &mut vr);
                    d = [vl[0] - vr[0], vl[1] - vr[1]];
                }
                Tensor2::outer(d, face.normal)
            })
            .collect()
    }

    fn check_vector(&self, w: &BrokenField) -> Result<()> {
        if w.components() != 2 || w.n_elements() != self.n_elements() || w.n_funcs() != self.n_funcs() {
            return Err(Error::InvalidArgument("expected a broken vector field on this mesh".into()));
        }
        Ok(())
    }

    /// `‖∇_h w‖_p + h^{1/p} ‖h^{-1} [[w ⊗ n]]‖_{p,Γ_h}` or, with
    /// [`NormVariant::Symmetric`], the same with `D_h w`.
    pub fn dg_norm(&self, w: &BrokenField, p: f64, variant: NormVariant) -> Result<f64> {
        self.dg_norm_with_datum(w, p, variant, |_| [0.0; 2])
    }

    /// [`DgCalculus::dg_norm`] with the boundary jump taken relative to the
    /// Dirichlet datum `g`, i.e. `(w - g) ⊗ n` on `∂Ω`.
    pub fn dg_norm_with_datum<G>(&self, w: &BrokenField, p: f64, variant: NormVariant, g: G) -> Result<f64>
    where
        G: Fn([f64; 2]) -> [f64; 2],
    {
        self.check_vector(w)?;
        if !(p > 1.0) {
            return Err(Error::InvalidArgument(format!("p must exceed 1, got {p}")));
        }
        let mut volume = 0.0;
        for e in 0..self.n_elements() {
            let own = w.element(e);
            for q in 0..self.refb.n_points() {
                let mut grad = self.local_gradient_at(e, q, own);
                if variant == NormVariant::Symmetric {
                    grad = grad.sym();
                }
                volume += self.refb.rule.weights[q] * self.geoms[e].det * grad.norm().powf(p);
            }
        }
        Ok(volume.powf(1.0 / p) + self.jump_seminorm_with_datum(w, p, g))
    }

    /// `h^{1/p} ‖h^{-1} [[w ⊗ n]]‖_{p,Γ_h}`.
    pub fn jump_seminorm(&self, w: &BrokenField, p: f64) -> f64 {
        self.jump_seminorm_with_datum(w, p, |_| [0.0; 2])
    }

    /// The jump seminorm with `(w - g) ⊗ n` on boundary faces.
    pub fn jump_seminorm_with_datum<G: Fn([f64; 2]) -> [f64; 2]>(&self, w: &BrokenField, p: f64, g: G) -> f64 {
        let mut faces = 0.0;
        for (f, face) in self.faces.iter().enumerate() {
            let jumps = self.jump_at_face(w, f);
            for ((j, wq), x) in jumps.iter().zip(&face.weights).zip(&face.points) {
                let j = if face.is_boundary() {
                    *j - Tensor2::outer(g(*x), face.normal)
                } else {
                    *j
                };
                faces += wq * (j.norm() / self.h).powf(p);
            }
        }
        self.h.powf(1.0 / p) * faces.powf(1.0 / p)
    }
}

/// Which local gradient a DG norm measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormVariant {
    Full,
    Symmetric,
}

fn symmetrize_element(field: &mut BrokenField, e: usize) {
    let n = field.n_funcs();
    for m in 0..n {
        let a = field.local(e, 1)[m];
        let b = field.local(e, 2)[m];
        field.local_mut(e, 1)[m] = 0.5 * (a + b);
        field.local_mut(e, 2)[m] = 0.5 * (a + b);
    }
}

/// `[[w ⊗ n]]` at arbitrary points on a face: `(w_L - w_R) ⊗ n` on interior
/// faces and `w ⊗ n` on boundary faces.
pub fn jump_tensor(mesh: &Mesh, refb: &ReferenceBasis, w: &BrokenField, face: usize, points: &[[f64; 2]]) -> Result<Vec<Tensor2>> {
    let f = mesh.face(face)?;
    points
        .iter()
        .map(|x| {
            let l = w.eval_at(mesh, &refb.basis, f.first(), *x)?;
            let mut d = [l[0], l[1]];
            if let Some(r) = f.second() {
                let rv = w.eval_at(mesh, &refb.basis, r, *x)?;
                d = [d[0] - rv[0], d[1] - rv[1]];
            }
            Ok(Tensor2::outer(d, f.normal))
        })
        .collect()
}

/// `{X}` at points on a face: the mean of both traces on interior faces,
/// the single trace on boundary faces.
pub fn average_tensor(mesh: &Mesh, refb: &ReferenceBasis, x_field: &BrokenField, face: usize, points: &[[f64; 2]]) -> Result<Vec<Tensor2>> {
    let f = mesh.face(face)?;
    if x_field.components() != TENSOR {
        return Err(Error::InvalidArgument("expected a broken tensor field".into()));
    }
    points
        .iter()
        .map(|x| {
            let l = x_field.eval_at(mesh, &refb.basis, f.first(), *x)?;
            let mut t = Tensor2([l[0], l[1], l[2], l[3]]);
            if let Some(r) = f.second() {
                let rv = x_field.eval_at(mesh, &refb.basis, r, *x)?;
                t = (t + Tensor2([rv[0], rv[1], rv[2], rv[3]])).scale(0.5);
            }
            Ok(t)
        })
        .collect()
}
