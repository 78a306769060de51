//! Broken polynomial fields, the local `L^2` projection and the continuous
//! piecewise-linear pressure space.

use crate::dense;
use crate::elements::{ElementGeometry, LagrangeBasis, ReferenceBasis};
use crate::mesh::{FaceKind, Mesh};
use crate::{Error, Result};

/// Coefficients of a broken `P_ℓ` field with `components` scalar
/// components, laid out element-major, then component-major, then by local
/// basis function.
#[derive(Debug, Clone, PartialEq)]
pub struct BrokenField {
    n_elements: usize,
    components: usize,
    n_funcs: usize,
    pub coeffs: Vec<f64>,
}

impl BrokenField {
    pub fn zeros(n_elements: usize, components: usize, n_funcs: usize) -> Self {
        Self {
            n_elements,
            components,
            n_funcs,
            coeffs: vec![0.0; n_elements * components * n_funcs],
        }
    }

    pub fn from_coeffs(n_elements: usize, components: usize, n_funcs: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != n_elements * components * n_funcs {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                n_elements * components * n_funcs,
                coeffs.len()
            )));
        }
        Ok(Self {
            n_elements,
            components,
            n_funcs,
            coeffs,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn n_funcs(&self) -> usize {
        self.n_funcs
    }

    #[inline]
    pub fn index(&self, element: usize, component: usize, func: usize) -> usize {
        (element * self.components + component) * self.n_funcs + func
    }

    pub fn local(&self, element: usize, component: usize) -> &[f64] {
        let start = self.index(element, component, 0);
        &self.coeffs[start..start + self.n_funcs]
    }

    pub fn local_mut(&mut self, element: usize, component: usize) -> &mut [f64] {
        let start = self.index(element, component, 0);
        &mut self.coeffs[start..start + self.n_funcs]
    }

    /// All coefficients of one element.
    pub fn element(&self, element: usize) -> &[f64] {
        let n = self.components * self.n_funcs;
        &self.coeffs[element * n..(element + 1) * n]
    }

    /// Value of every component on `element`, given the basis values there.
    pub fn eval_with(&self, element: usize, phi: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate().take(self.components) {
            *o = self.local(element, c).iter().zip(phi).map(|(a, b)| a * b).sum();
        }
    }

    /// Value of every component at the physical point `x` using the
    /// polynomial of `element`.
    pub fn eval_at(&self, mesh: &Mesh, basis: &LagrangeBasis, element: usize, x: [f64; 2]) -> Result<Vec<f64>> {
        let geom = ElementGeometry::new(mesh.triangle_vertices(element), element)?;
        let mut phi = vec![0.0; basis.len()];
        basis.values(geom.to_reference(x), &mut phi);
        let mut out = vec![0.0; self.components];
        self.eval_with(element, &phi, &mut out);
        Ok(out)
    }

    pub fn axpy(&mut self, a: f64, other: &BrokenField) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
    }
}

/// Which trace of a face to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// The triangle the stored normal points away from.
    First,
    /// The triangle the stored normal points into (interior faces only).
    Second,
}

/// Local `L^2` projection of a pointwise-evaluable field onto the broken
/// space, computed with the volume rule of `refb`.
pub fn l2_project<F>(mesh: &Mesh, refb: &ReferenceBasis, components: usize, f: F) -> Result<BrokenField>
where
    F: Fn([f64; 2], &mut [f64]),
{
    let n = refb.n_funcs();
    let mut field = BrokenField::zeros(mesh.n_triangles(), components, n);
    let mut value = vec![0.0; components];
    let mut rhs = vec![0.0; components * n];
    for e in 0..mesh.n_triangles() {
        let geom = ElementGeometry::new(mesh.triangle_vertices(e), e)?;
        rhs.iter_mut().for_each(|r| *r = 0.0);
        for q in 0..refb.n_points() {
            let x = geom.to_physical(refb.rule.reference_point(q));
            f(x, &mut value);
            let w = refb.rule.weights[q] * geom.det;
            for (c, v) in value.iter().enumerate() {
                for (i, phi) in refb.values_at(q).iter().enumerate() {
                    rhs[c * n + i] += w * v * phi;
                }
            }
        }
        for c in 0..components {
            let out = field.local_mut(e, c);
            for (i, o) in out.iter_mut().enumerate() {
                *o = (0..n).map(|j| refb.mass_inv[i * n + j] * rhs[c * n + j]).sum::<f64>() / geom.det;
            }
        }
    }
    Ok(field)
}

/// Project a broken field onto itself through the local mass system. On
/// fields of the same degree this is the identity up to round-off.
pub fn project_broken(mesh: &Mesh, refb: &ReferenceBasis, field: &BrokenField) -> Result<BrokenField> {
    let n = refb.n_funcs();
    let comps = field.components();
    let mut out = BrokenField::zeros(mesh.n_triangles(), comps, n);
    let mut rhs = vec![0.0; n];
    let mut mass = vec![0.0; n * n];
    for e in 0..mesh.n_triangles() {
        let geom = ElementGeometry::new(mesh.triangle_vertices(e), e)?;
        for c in 0..comps {
            rhs.iter_mut().for_each(|r| *r = 0.0);
            mass.iter_mut().for_each(|m| *m = 0.0);
            for q in 0..refb.n_points() {
                let phi = refb.values_at(q);
                let w = refb.rule.weights[q] * geom.det;
                let v: f64 = field.local(e, c).iter().zip(phi).map(|(a, b)| a * b).sum();
                for i in 0..n {
                    rhs[i] += w * v * phi[i];
                    for j in 0..n {
                        mass[i * n + j] += w * phi[i] * phi[j];
                    }
                }
            }
            let sol = dense::solve(n, &mass, &rhs)
                .ok_or_else(|| Error::InvalidArgument(format!("singular local mass matrix on element {e}")))?;
            out.local_mut(e, c).copy_from_slice(&sol);
        }
    }
    Ok(out)
}

/// Evaluate the trace of `field` from one side of `face` at physical points
/// on the face.
pub fn eval_trace(
    mesh: &Mesh,
    basis: &LagrangeBasis,
    field: &BrokenField,
    face: usize,
    side: Side,
    points: &[[f64; 2]],
) -> Result<Vec<Vec<f64>>> {
    let f = mesh.face(face)?;
    let element = match (side, f.kind) {
        (Side::First, _) => f.first(),
        (Side::Second, FaceKind::Interior { right, .. }) => right,
        (Side::Second, FaceKind::Boundary { .. }) => return Err(Error::BoundaryFaceSide(face)),
    };
    points
        .iter()
        .map(|x| field.eval_at(mesh, basis, element, *x))
        .collect()
}

/// Globally continuous piecewise-linear scalar field stored at mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPressure {
    pub coeffs: Vec<f64>,
    /// Mean subtracted by the last call to [`ContinuousPressure::apply_zero_mean`].
    pub mean_offset: f64,
}

impl ContinuousPressure {
    pub fn zeros(n_vertices: usize) -> Self {
        Self {
            coeffs: vec![0.0; n_vertices],
            mean_offset: 0.0,
        }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        Self {
            coeffs,
            mean_offset: 0.0,
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate<F: Fn([f64; 2]) -> f64>(mesh: &Mesh, f: F) -> Self {
        Self::from_coeffs(mesh.vertices().iter().map(|x| f(*x)).collect())
    }

    /// `∫_Ω q dx`, exact for piecewise-linear fields.
    pub fn integral(&self, mesh: &Mesh) -> f64 {
        mesh.triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| mesh.area(t) / 3.0 * tri.iter().map(|&v| self.coeffs[v]).sum::<f64>())
            .sum()
    }

    pub fn mean(&self, mesh: &Mesh) -> f64 {
        let area: f64 = (0..mesh.n_triangles()).map(|t| mesh.area(t)).sum();
        self.integral(mesh) / area
    }

    pub fn apply_zero_mean(&self, mesh: &Mesh) -> Self {
        let m = self.mean(mesh);
        Self {
            coeffs: self.coeffs.iter().map(|c| c - m).collect(),
            mean_offset: self.mean_offset + m,
        }
    }

    /// Value on `element` at barycentric coordinates `lambda`.
    pub fn eval(&self, mesh: &Mesh, element: usize, lambda: [f64; 3]) -> f64 {
        let tri = mesh.triangles()[element];
        (0..3).map(|i| lambda[i] * self.coeffs[tri[i]]).sum()
    }
}

/// `∫_Ω |f|^2` of a broken field with the volume rule of `refb`.
pub fn l2_norm_squared(mesh: &Mesh, refb: &ReferenceBasis, field: &BrokenField) -> f64 {
    let mut value = vec![0.0; field.components()];
    let mut total = 0.0;
    for e in 0..mesh.n_triangles() {
        let det = 2.0 * mesh.area(e);
        for q in 0..refb.n_points() {
            field.eval_with(e, refb.values_at(q), &mut value);
            total += refb.rule.weights[q] * det * value.iter().map(|v| v * v).sum::<f64>();
        }
    }
    total
}
