//! Residual and Jacobian assembly for the fully discrete saddle-point
//! system: time derivative, extra stress (LDG or SIP), convection (two
//! skew-symmetric forms), pressure coupling with a mean-value multiplier,
//! and the forcing functional.
//!
//! Unknowns are ordered as `[velocity, pressure at vertices, λ]`, where `λ`
//! is the Lagrange multiplier enforcing a zero pressure mean.

mod convective;
pub mod sparse;
mod stress;

use std::sync::Arc;

use crate::constitutive::{ConvectiveVariant, ModelParams, StressVariant};
use crate::dgcalc::{DgCalculus, TENSOR};
use crate::mesh::Mesh;
use crate::spaces::{l2_project, BrokenField, ContinuousPressure};
use crate::tensor::Tensor2;
use crate::{Error, Result};

pub use sparse::{CsrMatrix, Pattern};

/// Residual vector and optional Jacobian over the full unknown vector.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub residual: Vec<f64>,
    pub jacobian: Option<CsrMatrix>,
    pub n_velocity: usize,
    pub n_pressure: usize,
}

impl SparseSystem {
    pub fn residual_norm(&self) -> f64 {
        self.residual.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

/// Nonhomogeneous Dirichlet data `g` on `∂Ω`, entering through the jumps
/// `(v_h - g) ⊗ n` on boundary faces.
#[derive(Debug, Clone)]
pub struct BoundaryDatum {
    /// `R_∂ g`, see [`DgCalculus::boundary_lift`].
    pub lift: BrokenField,
    /// `g` at the quadrature points of every face (empty on interior faces).
    pub face_values: Vec<Vec<[f64; 2]>>,
    /// `⟨g · n, ψ_j⟩_{∂Ω}` for every pressure hat function.
    pub continuity: Vec<f64>,
}

impl BoundaryDatum {
    pub fn new<G: Fn([f64; 2]) -> [f64; 2]>(calc: &DgCalculus, g: G) -> Self {
        let mesh = calc.mesh();
        let lift = calc.boundary_lift(&g);
        let mut face_values = vec![Vec::new(); calc.faces.len()];
        let mut continuity = vec![0.0; mesh.n_vertices()];
        for (f, face) in calc.faces.iter().enumerate() {
            if !face.is_boundary() {
                continue;
            }
            let verts = mesh.faces()[f].vertices;
            let a = mesh.vertices()[verts[0]];
            for (x, w) in face.points.iter().zip(&face.weights) {
                let gv = g(*x);
                let s = ((x[0] - a[0]).powi(2) + (x[1] - a[1]).powi(2)).sqrt() / face.length;
                let gn = gv[0] * face.normal[0] + gv[1] * face.normal[1];
                continuity[verts[0]] += w * gn * (1.0 - s);
                continuity[verts[1]] += w * gn * s;
                face_values[f].push(gv);
            }
        }
        Self {
            lift,
            face_values,
            continuity,
        }
    }
}

/// Data fixed during one time step.
#[derive(Debug, Clone)]
pub struct StepContext {
    /// Step size; `None` drops the time-derivative term.
    pub tau: Option<f64>,
    pub v_prev: Vec<f64>,
    /// `(g, z) + (G, G_h z)` for every velocity test function.
    pub forcing: Vec<f64>,
    pub datum: Option<BoundaryDatum>,
}

impl StepContext {
    /// A stationary context without forcing or boundary data.
    pub fn stationary(n_velocity: usize) -> Self {
        Self {
            tau: None,
            v_prev: vec![0.0; n_velocity],
            forcing: vec![0.0; n_velocity],
            datum: None,
        }
    }
}

/// Per-element quantities derived from the current velocity.
#[derive(Debug, Clone)]
pub struct ElementState {
    /// `G_h v` at every volume point, `grads[e * nq + q]`.
    pub grads: Vec<Tensor2>,
    /// Elementwise mean of `|𝒟_h v|`.
    pub means: Vec<f64>,
    /// Derivative of `means[e]` with respect to the stencil coefficients
    /// of `e`; empty unless requested.
    pub mean_derivatives: Vec<Vec<f64>>,
    /// Coefficients of `R_h v - R_∂ g`, `lifts[e * TENSOR * n + r * n + m]`.
    pub lifts: Vec<f64>,
}

/// Terms of the velocity residual tested with the velocity itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    /// `⟨S v, v⟩`
    pub dissipation: f64,
    /// `⟨B v, v⟩`
    pub convection: f64,
    /// `(∇q, v)`
    pub pressure: f64,
    /// `(g, v) + (G, G_h v)`
    pub forcing: f64,
    /// Full residual tested with `v` (nonzero only up to the solver tolerance).
    pub residual: f64,
}

/// Selects one operator for [`Assembler::apply_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Stress,
    ConvectiveI,
    ConvectiveII,
}

/// Assembles the discrete system on a fixed mesh.
#[derive(Debug, Clone)]
pub struct Assembler {
    pub calc: DgCalculus,
    pub params: ModelParams,
    pattern: Arc<Pattern>,
    /// `∫_K φ_a` on the reference element.
    phi_ref_integrals: Vec<f64>,
    /// Physical gradients of the three vertex hat functions per element.
    hat_gradients: Vec<[[f64; 2]; 3]>,
    /// `∫_Ω ψ_j` per vertex.
    hat_integrals: Vec<f64>,
}

impl Assembler {
    pub fn new(mesh: Mesh, params: ModelParams, volume_degree: usize, face_points: usize) -> Result<Self> {
        params.validate()?;
        let calc = DgCalculus::new(mesh, params.ell, volume_degree, face_points)?;
        let n = calc.n_funcs();
        let phi_ref_integrals = (0..n)
            .map(|a| (0..calc.refb.n_points()).map(|q| calc.refb.rule.weights[q] * calc.refb.values_at(q)[a]).sum())
            .collect();
        let hat_gradients = calc
            .geoms
            .iter()
            .map(|g| [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]].map(|r| g.push_gradient(r)))
            .collect();
        let mesh = calc.mesh();
        let mut hat_integrals = vec![0.0; mesh.n_vertices()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for &v in tri {
                hat_integrals[v] += mesh.area(t) / 3.0;
            }
        }
        let pattern = Arc::new(build_pattern(&calc));
        Ok(Self {
            calc,
            params,
            pattern,
            phi_ref_integrals,
            hat_gradients,
            hat_integrals,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.calc.mesh()
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn n_velocity(&self) -> usize {
        self.calc.n_velocity_dofs()
    }

    pub fn n_pressure(&self) -> usize {
        self.mesh().n_vertices()
    }

    /// Total number of unknowns including the mean multiplier.
    pub fn n_unknowns(&self) -> usize {
        self.n_velocity() + self.n_pressure() + 1
    }

    pub fn hat_integrals(&self) -> &[f64] {
        &self.hat_integrals
    }

    pub fn empty_system(&self, with_jacobian: bool) -> SparseSystem {
        SparseSystem {
            residual: vec![0.0; self.n_unknowns()],
            jacobian: with_jacobian.then(|| CsrMatrix::zeros(self.pattern.clone())),
            n_velocity: self.n_velocity(),
            n_pressure: self.n_pressure(),
        }
    }

    /// Velocity as a broken field.
    pub fn velocity_field(&self, x: &[f64]) -> BrokenField {
        BrokenField::from_coeffs(self.calc.n_elements(), 2, self.calc.n_funcs(), x[..self.n_velocity()].to_vec())
            .expect("velocity block has the right length")
    }

    pub fn pressure_field(&self, x: &[f64]) -> ContinuousPressure {
        let nv = self.n_velocity();
        ContinuousPressure::from_coeffs(x[nv..nv + self.n_pressure()].to_vec())
    }

    /// Local `L^2` projection of a vector field onto the velocity space.
    pub fn project_velocity<F: Fn([f64; 2]) -> [f64; 2]>(&self, f: F) -> Result<Vec<f64>> {
        Ok(l2_project(self.mesh(), &self.calc.refb, 2, |x, o| o.copy_from_slice(&f(x)))?.coeffs)
    }

    /// Derived per-element data of the velocity `v`.
    pub fn element_state(&self, v: &[f64], datum: Option<&BoundaryDatum>, with_derivatives: bool) -> ElementState {
        let calc = &self.calc;
        let n = calc.n_funcs();
        let nq = calc.refb.n_points();
        let ne = calc.n_elements();
        let mut grads = Vec::with_capacity(ne * nq);
        let mut means = Vec::with_capacity(ne);
        let mut mean_derivatives = Vec::new();
        let mut lifts = Vec::with_capacity(ne * TENSOR * n);
        let mut local = Vec::new();
        for e in 0..ne {
            calc.gather(e, v, &mut local);
            let mut lift = calc.lift_local(e, &local);
            if let Some(d) = datum {
                for (r, l) in lift.chunks_mut(n).enumerate() {
                    for (m, x) in l.iter_mut().enumerate() {
                        *x -= d.lift.local(e, r)[m];
                    }
                }
            }
            let det = calc.geoms[e].det;
            let area = 0.5 * det;
            let mut mean = 0.0;
            let mut dmean = if with_derivatives { vec![0.0; local.len()] } else { Vec::new() };
            for q in 0..nq {
                let mut g = calc.gradient_at(e, q, &local);
                if let Some(d) = datum {
                    let phi = calc.refb.values_at(q);
                    for r in 0..TENSOR {
                        g.0[r] += d.lift.local(e, r).iter().zip(phi).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
                let w = calc.refb.rule.weights[q] * det;
                let s = g.sym();
                let ns = s.norm();
                mean += w * ns / area;
                if with_derivatives && ns > 0.0 {
                    for r in 0..TENSOR {
                        let row = calc.gradient_row(e, q, r);
                        let c = w * s.0[r] / (ns * area);
                        for (dm, b) in dmean.iter_mut().zip(row) {
                            *dm += c * b;
                        }
                    }
                }
                grads.push(g);
            }
            means.push(mean);
            if with_derivatives {
                mean_derivatives.push(dmean);
            }
            lifts.extend_from_slice(&lift);
        }
        ElementState {
            grads,
            means,
            mean_derivatives,
            lifts,
        }
    }

    /// Full residual and (optionally) Jacobian at the state `x`.
    pub fn assemble(&self, x: &[f64], ctx: &StepContext, with_jacobian: bool) -> Result<SparseSystem> {
        if x.len() != self.n_unknowns() {
            return Err(Error::InvalidArgument(format!(
                "state has length {}, expected {}",
                x.len(),
                self.n_unknowns()
            )));
        }
        let nv = self.n_velocity();
        let v = &x[..nv];
        let mut sys = self.empty_system(with_jacobian);
        if let Some(tau) = ctx.tau {
            self.add_mass(v, &ctx.v_prev, tau, &mut sys)?;
        }
        let exact_shift = self.params.shift_linearization == crate::constitutive::ShiftLinearization::Exact;
        let state = self.element_state(v, ctx.datum.as_ref(), with_jacobian && exact_shift);
        self.add_stress(v, &state, ctx.datum.as_ref(), &mut sys)?;
        match self.params.convective_variant {
            ConvectiveVariant::I => self.add_convective_i(v, &mut sys),
            ConvectiveVariant::II => self.add_convective_ii(v, &state, &mut sys),
            ConvectiveVariant::None => {}
        }
        self.add_pressure(x, ctx.datum.as_ref(), &mut sys);
        for (r, f) in sys.residual.iter_mut().zip(&ctx.forcing) {
            *r -= f;
        }
        Ok(sys)
    }

    /// Velocity residual of a single operator, i.e. the vector
    /// `z ↦ ⟨A v, z⟩` over all velocity basis functions.
    pub fn apply_operator(&self, v: &[f64], op: Operator) -> Result<Vec<f64>> {
        let mut sys = self.empty_system(false);
        match op {
            Operator::Stress => {
                let state = self.element_state(v, None, false);
                self.add_stress(v, &state, None, &mut sys)?;
            }
            Operator::ConvectiveI => self.add_convective_i(v, &mut sys),
            Operator::ConvectiveII => {
                let state = self.element_state(v, None, false);
                self.add_convective_ii(v, &state, &mut sys);
            }
        }
        sys.residual.truncate(self.n_velocity());
        Ok(sys.residual)
    }

    /// Adds `(1/τ)(v - v_prev, z)`.
    pub fn add_mass(&self, v: &[f64], v_prev: &[f64], tau: f64, sys: &mut SparseSystem) -> Result<()> {
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
        }
        let calc = &self.calc;
        let n = calc.n_funcs();
        let mass = &calc.refb.mass;
        for e in 0..calc.n_elements() {
            let det = calc.geoms[e].det;
            for c in 0..2 {
                for a in 0..n {
                    let row = calc.dof(e, c, a);
                    for b in 0..n {
                        let col = calc.dof(e, c, b);
                        let m = mass[a * n + b] * det / tau;
                        sys.residual[row] += m * (v[col] - v_prev[col]);
                        if let Some(j) = sys.jacobian.as_mut() {
                            j.add(row, col, m);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Stress operator of the configured variant.
    pub fn add_stress(&self, v: &[f64], state: &ElementState, datum: Option<&BoundaryDatum>, sys: &mut SparseSystem) -> Result<()> {
        self.add_stress_volume(state, sys)?;
        match self.params.stress_variant {
            StressVariant::Ldg => self.add_penalty(v, state, datum, true, sys),
            StressVariant::Sip => {
                self.add_penalty(v, state, datum, false, sys)?;
                self.add_sip_lifting(state, sys)
            }
        }
    }

    /// Adds `(∇q, z)` to the momentum rows, `(v, ∇ψ_j) - ⟨g·n, ψ_j⟩ + λ ∫ψ_j`
    /// to the continuity rows and `Σ q_j ∫ψ_j` to the multiplier row. For
    /// continuous piecewise-linear `q` the momentum term equals
    /// `-(q, Div_h z)` and the continuity term equals `-(Div_h v, ψ_j)`.
    pub fn add_pressure(&self, x: &[f64], datum: Option<&BoundaryDatum>, sys: &mut SparseSystem) {
        let calc = &self.calc;
        let n = calc.n_funcs();
        let nv = self.n_velocity();
        let np = self.n_pressure();
        let lambda_index = nv + np;
        let mesh = calc.mesh();
        for e in 0..calc.n_elements() {
            let det = calc.geoms[e].det;
            let tri = mesh.triangles()[e];
            for (i, &vert) in tri.iter().enumerate() {
                let grad = self.hat_gradients[e][i];
                let p_index = nv + vert;
                for c in 0..2 {
                    for a in 0..n {
                        let row = calc.dof(e, c, a);
                        let b = self.phi_ref_integrals[a] * det * grad[c];
                        sys.residual[row] += b * x[p_index];
                        sys.residual[p_index] += b * x[row];
                        if let Some(j) = sys.jacobian.as_mut() {
                            j.add(row, p_index, b);
                            j.add(p_index, row, b);
                        }
                    }
                }
            }
        }
        for (vert, m) in self.hat_integrals.iter().enumerate() {
            let p_index = nv + vert;
            sys.residual[p_index] += m * x[lambda_index];
            sys.residual[lambda_index] += m * x[p_index];
            if let Some(d) = datum {
                sys.residual[p_index] -= d.continuity[vert];
            }
            if let Some(j) = sys.jacobian.as_mut() {
                j.add(p_index, lambda_index, *m);
                j.add(lambda_index, p_index, *m);
            }
        }
    }

    /// `(g, z) + (G, G_h z)` for all velocity basis functions, with the
    /// DG gradient of the test function evaluated at volume points.
    pub fn forcing_vector<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn([f64; 2]) -> ([f64; 2], Tensor2),
    {
        let calc = &self.calc;
        let n = calc.n_funcs();
        let mut out = vec![0.0; self.n_velocity()];
        for e in 0..calc.n_elements() {
            let geom = &calc.geoms[e];
            let dofs = calc.stencil_dofs(e);
            for q in 0..calc.refb.n_points() {
                let x = geom.to_physical(calc.refb.rule.reference_point(q));
                let (g, big_g) = f(x);
                let w = calc.refb.rule.weights[q] * geom.det;
                let phi = calc.refb.values_at(q);
                for c in 0..2 {
                    for a in 0..n {
                        out[calc.dof(e, c, a)] += w * g[c] * phi[a];
                    }
                }
                for r in 0..TENSOR {
                    let row = calc.gradient_row(e, q, r);
                    let c = w * big_g.0[r];
                    for (d, b) in dofs.iter().zip(row) {
                        out[*d] += c * b;
                    }
                }
            }
        }
        out
    }

    /// The same functional as [`Assembler::forcing_vector`] assembled as
    /// `(g, z) + (G, ∇_h z) - ⟨[[z ⊗ n]], {Π G}⟩_{Γ_h}` with `Π` the local
    /// `L^2` projection onto broken tensors.
    pub fn forcing_vector_by_faces<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn([f64; 2]) -> ([f64; 2], Tensor2),
    {
        let calc = &self.calc;
        let n = calc.n_funcs();
        let mut out = vec![0.0; self.n_velocity()];
        for e in 0..calc.n_elements() {
            let geom = &calc.geoms[e];
            for q in 0..calc.refb.n_points() {
                let x = geom.to_physical(calc.refb.rule.reference_point(q));
                let (g, big_g) = f(x);
                let w = calc.refb.rule.weights[q] * geom.det;
                let phi = calc.refb.values_at(q);
                let dphi = calc.refb.gradients_at(q);
                for c in 0..2 {
                    for a in 0..n {
                        let pg = geom.push_gradient(dphi[a]);
                        out[calc.dof(e, c, a)] +=
                            w * (g[c] * phi[a] + big_g.get(c, 0) * pg[0] + big_g.get(c, 1) * pg[1]);
                    }
                }
            }
        }
        let projected = l2_project(self.mesh(), &calc.refb, TENSOR, |x, o| o.copy_from_slice(&f(x).1 .0))?;
        let mut val_l = [0.0; 4];
        let mut val_r = [0.0; 4];
        for face in &calc.faces {
            for q in 0..face.n_points() {
                let pl = &face.phi_left[q * n..(q + 1) * n];
                projected.eval_with(face.left, pl, &mut val_l);
                let avg = match face.right {
                    Some(r) => {
                        projected.eval_with(r, &face.phi_right[q * n..(q + 1) * n], &mut val_r);
                        Tensor2(val_l) + Tensor2(val_r)
                    }
                    None => Tensor2(val_l).scale(2.0),
                }
                .scale(0.5);
                let an = avg.apply(face.normal);
                let w = face.weights[q];
                for c in 0..2 {
                    for a in 0..n {
                        out[calc.dof(face.left, c, a)] -= w * an[c] * pl[a];
                        if let Some(r) = face.right {
                            out[calc.dof(r, c, a)] += w * an[c] * face.phi_right[q * n + a];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `(a, b)` in `L^2` for velocity coefficient vectors.
    pub fn mass_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let calc = &self.calc;
        let n = calc.n_funcs();
        let mass = &calc.refb.mass;
        let mut total = 0.0;
        for e in 0..calc.n_elements() {
            let det = calc.geoms[e].det;
            for c in 0..2 {
                let base = calc.dof(e, c, 0);
                for i in 0..n {
                    for j in 0..n {
                        total += det * mass[i * n + j] * a[base + i] * b[base + j];
                    }
                }
            }
        }
        total
    }

    /// The velocity residual at `x` split into its terms, each contracted
    /// with the velocity part of `x` itself.
    pub fn energy_terms(&self, x: &[f64], ctx: &StepContext) -> Result<EnergyTerms> {
        let nv = self.n_velocity();
        let v = &x[..nv];
        let dot = |sys: &SparseSystem| sys.residual[..nv].iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let state = self.element_state(v, ctx.datum.as_ref(), false);
        let mut sys = self.empty_system(false);
        self.add_stress(v, &state, ctx.datum.as_ref(), &mut sys)?;
        let dissipation = dot(&sys);
        let mut sys = self.empty_system(false);
        match self.params.convective_variant {
            ConvectiveVariant::I => self.add_convective_i(v, &mut sys),
            ConvectiveVariant::II => self.add_convective_ii(v, &state, &mut sys),
            ConvectiveVariant::None => {}
        }
        let convection = dot(&sys);
        let mut sys = self.empty_system(false);
        self.add_pressure(x, ctx.datum.as_ref(), &mut sys);
        let pressure = dot(&sys);
        let forcing = ctx.forcing.iter().zip(v).map(|(a, b)| a * b).sum();
        let residual = dot(&self.assemble(x, ctx, false)?);
        Ok(EnergyTerms {
            dissipation,
            convection,
            pressure,
            forcing,
            residual,
        })
    }

    /// Exact integral `∫_Ω q_h` weights, i.e. `(Σ_j q_j ∫ψ_j)`.
    pub fn pressure_integral(&self, q: &[f64]) -> f64 {
        q.iter().zip(&self.hat_integrals).map(|(a, b)| a * b).sum()
    }
}

fn build_pattern(calc: &DgCalculus) -> Pattern {
    let mesh = calc.mesh();
    let n = calc.n_funcs();
    let block = 2 * n;
    let nv = calc.n_velocity_dofs();
    let np = mesh.n_vertices();
    let lambda = nv + np;
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nv + np + 1];
    let mut vertex_elements: Vec<Vec<usize>> = vec![Vec::new(); np];
    for (e, tri) in mesh.triangles().iter().enumerate() {
        for &v in tri {
            vertex_elements[v].push(e);
        }
    }
    for e in 0..calc.n_elements() {
        let mut elems: Vec<usize> = calc.ops[e]
            .stencil
            .iter()
            .flat_map(|&k| calc.ops[k].stencil.iter().copied())
            .collect();
        elems.sort_unstable();
        elems.dedup();
        let mut cols: Vec<usize> = elems.iter().flat_map(|&k| (0..block).map(move |i| k * block + i)).collect();
        cols.extend(mesh.triangles()[e].iter().map(|v| nv + v));
        for i in 0..block {
            rows[e * block + i] = cols.clone();
        }
    }
    for (v, elems) in vertex_elements.iter().enumerate() {
        let mut cols: Vec<usize> = elems.iter().flat_map(|&k| (0..block).map(move |i| k * block + i)).collect();
        cols.push(lambda);
        rows[nv + v] = cols;
    }
    rows[lambda] = (nv..nv + np).collect();
    Pattern::from_rows(rows)
}
