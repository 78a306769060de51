//! Conforming triangulations of the square `(-1,1)^2` with red refinement and
//! face connectivity.

use std::collections::HashMap;
use std::io::Write;

use crate::elements::gauss_legendre_unit;
use crate::{Error, Result};

/// Which triangles a face separates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Shared by `left < right`; the stored normal points from left to right.
    Interior { left: usize, right: usize },
    /// On `∂Ω`; the stored normal points outward.
    Boundary { owner: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct Face {
    pub vertices: [usize; 2],
    pub kind: FaceKind,
    pub normal: [f64; 2],
    pub length: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        matches!(self.kind, FaceKind::Boundary { .. })
    }

    /// The triangle on the side the normal points away from.
    pub fn first(&self) -> usize {
        match self.kind {
            FaceKind::Interior { left, .. } => left,
            FaceKind::Boundary { owner } => owner,
        }
    }

    pub fn second(&self) -> Option<usize> {
        match self.kind {
            FaceKind::Interior { right, .. } => Some(right),
            FaceKind::Boundary { .. } => None,
        }
    }
}

/// Physical-space quadrature on a face.
#[derive(Debug, Clone)]
pub struct FaceQuadrature {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub normal: [f64; 2],
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    faces: Vec<Face>,
    /// `tri_faces[t][i]` is the face opposite local vertex `i`.
    tri_faces: Vec<[usize; 3]>,
    h_max: f64,
    level: u32,
}

impl Mesh {
    /// Build a mesh from vertices and counter-clockwise triangles.
    pub fn from_triangles(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, level: u32) -> Result<Self> {
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("triangle {t} references a missing vertex")));
            }
            if signed_area(tri.map(|v| vertices[v])) <= 0.0 {
                return Err(Error::DegenerateTriangle(t));
            }
        }
        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces: Vec<Face> = Vec::new();
        let mut tri_faces = vec![[usize::MAX; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                match edge_map.get(&key) {
                    Some(&f) => {
                        let face = &mut faces[f];
                        match face.kind {
                            FaceKind::Boundary { owner } => {
                                face.kind = FaceKind::Interior { left: owner, right: t };
                            }
                            FaceKind::Interior { .. } => {
                                return Err(Error::InvalidArgument(format!(
                                    "edge {key:?} shared by more than two triangles"
                                )));
                            }
                        }
                        tri_faces[t][i] = f;
                    }
                    None => {
                        let pa = vertices[a];
                        let pb = vertices[b];
                        let d = [pb[0] - pa[0], pb[1] - pa[1]];
                        let length = (d[0] * d[0] + d[1] * d[1]).sqrt();
                        // (a, b) runs counter-clockwise around t, so this is outward for t
                        let normal = [d[1] / length, -d[0] / length];
                        edge_map.insert(key, faces.len());
                        tri_faces[t][i] = faces.len();
                        faces.push(Face {
                            vertices: [a, b],
                            kind: FaceKind::Boundary { owner: t },
                            normal,
                            length,
                        });
                    }
                }
            }
        }
        let h_max = triangles
            .iter()
            .map(|tri| diameter(tri.map(|v| vertices[v])))
            .fold(0.0, f64::max);
        Ok(Self {
            vertices,
            triangles,
            faces,
            tri_faces,
            h_max,
            level,
        })
    }

    /// Level-0 grid: 4x4 squares of side 1/2 covering `(-1,1)^2`, each cut
    /// along a diagonal whose direction alternates like a checkerboard. The
    /// diagonals of the corner squares pass through the domain corners, so
    /// every triangle has at most one boundary edge.
    pub fn initial_grid() -> Self {
        let n = 4;
        let step = 2.0 / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([-1.0 + step * i as f64, -1.0 + step * j as f64]);
            }
        }
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = idx(i, j);
                let b = idx(i + 1, j);
                let c = idx(i + 1, j + 1);
                let d = idx(i, j + 1);
                if (i + j) % 2 == 0 {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                } else {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                }
            }
        }
        Self::from_triangles(vertices, triangles, 0).expect("initial grid is valid")
    }

    /// Red refinement: each triangle is split into four congruent children
    /// by connecting its edge midpoints.
    pub fn refine_red(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let pa = vertices[a];
                let pb = vertices[b];
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[v0, v1, v2] in &self.triangles {
            let m01 = mid(v0, v1, &mut vertices);
            let m12 = mid(v1, v2, &mut vertices);
            let m20 = mid(v2, v0, &mut vertices);
            triangles.push([v0, m01, m20]);
            triangles.push([m01, v1, m12]);
            triangles.push([m20, m12, v2]);
            triangles.push([m01, m12, m20]);
        }
        Self::from_triangles(vertices, triangles, self.level + 1).expect("red refinement preserves validity")
    }

    /// The level-`n` mesh: the initial grid refined `n` times.
    pub fn at_level(level: u32) -> Self {
        (0..level).fold(Self::initial_grid(), |m, _| m.refine_red())
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, index: usize) -> Result<&Face> {
        self.faces.get(index).ok_or(Error::InvalidFace {
            index,
            count: self.faces.len(),
        })
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces.iter().enumerate().filter(|(_, f)| !f.is_boundary())
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces.iter().enumerate().filter(|(_, f)| f.is_boundary())
    }

    pub fn triangle_faces(&self, t: usize) -> [usize; 3] {
        self.tri_faces[t]
    }

    /// Neighbors of triangle `t` across its three faces (`None` on `∂Ω`).
    pub fn neighbors(&self, t: usize) -> [Option<usize>; 3] {
        self.tri_faces[t].map(|f| {
            let face = &self.faces[f];
            match face.kind {
                FaceKind::Interior { left, right } => Some(if left == t { right } else { left }),
                FaceKind::Boundary { .. } => None,
            }
        })
    }

    /// Outward unit normal of triangle `t` on face `f`.
    pub fn outward_normal(&self, t: usize, f: usize) -> [f64; 2] {
        let face = &self.faces[f];
        if face.first() == t {
            face.normal
        } else {
            [-face.normal[0], -face.normal[1]]
        }
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn triangle_vertices(&self, t: usize) -> [[f64; 2]; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(self.triangle_vertices(t))
    }

    /// `h_K / ρ_K` with `ρ_K` the inscribed-circle diameter.
    pub fn chunkiness(&self, t: usize) -> f64 {
        let v = self.triangle_vertices(t);
        let perimeter: f64 = (0..3).map(|i| dist(v[i], v[(i + 1) % 3])).sum();
        let rho = 4.0 * signed_area(v) / perimeter;
        diameter(v) / rho
    }

    /// Gauss-Legendre points on a face, mapped to physical space. The nodes
    /// are strictly interior to the segment.
    pub fn face_quadrature(&self, face: usize, n_points: usize) -> Result<FaceQuadrature> {
        let f = self.face(face)?;
        let a = self.vertices[f.vertices[0]];
        let b = self.vertices[f.vertices[1]];
        let (s, w) = gauss_legendre_unit(n_points);
        Ok(FaceQuadrature {
            points: s
                .iter()
                .map(|s| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
                .collect(),
            weights: w.iter().map(|w| w * f.length).collect(),
            normal: f.normal,
            length: f.length,
        })
    }

    /// Plain-text dump: one record per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# level {} h_max {:.17e}", self.level, self.h_max)?;
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(out, "vertex {i} {:.17e} {:.17e}", v[0], v[1])?;
        }
        for (i, t) in self.triangles.iter().enumerate() {
            writeln!(out, "triangle {i} {} {} {}", t[0], t[1], t[2])?;
        }
        for (i, f) in self.faces.iter().enumerate() {
            let (l, r) = match f.kind {
                FaceKind::Interior { left, right } => (left as i64, right as i64),
                FaceKind::Boundary { owner } => (owner as i64, -1),
            };
            writeln!(
                out,
                "face {i} {} {} {l} {r} {:.17e} {:.17e}",
                f.vertices[0], f.vertices[1], f.normal[0], f.normal[1]
            )?;
        }
        Ok(())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn diameter(v: [[f64; 2]; 3]) -> f64 {
    dist(v[0], v[1]).max(dist(v[1], v[2])).max(dist(v[2], v[0]))
}

fn signed_area(v: [[f64; 2]; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_invariants(m: &Mesh) {
        let total: f64 = (0..m.n_triangles()).map(|t| m.area(t)).sum();
        assert!((total - 4.0).abs() < 1e-13);
        assert!((0..m.n_triangles()).all(|t| m.area(t) > 0.0));
        let mut count = vec![0usize; m.n_triangles()];
        let mut boundary_count = vec![0usize; m.n_triangles()];
        for f in m.faces() {
            match f.kind {
                FaceKind::Interior { left, right } => {
                    assert!(left < right);
                    count[left] += 1;
                    count[right] += 1;
                }
                FaceKind::Boundary { owner } => {
                    count[owner] += 1;
                    boundary_count[owner] += 1;
                    // outward: the normal points away from the owner's centroid
                    let v = m.triangle_vertices(owner);
                    let c = [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0];
                    let p = m.vertices()[f.vertices[0]];
                    assert!((p[0] - c[0]) * f.normal[0] + (p[1] - c[1]) * f.normal[1] > 0.0);
                    // on the boundary of the square
                    let q = m.vertices()[f.vertices[1]];
                    let on_edge = |x: f64| (x.abs() - 1.0).abs() < 1e-14;
                    assert!((on_edge(p[0]) && on_edge(q[0])) || (on_edge(p[1]) && on_edge(q[1])));
                }
            }
        }
        assert!(count.iter().all(|&c| c == 3));
        assert!(boundary_count.iter().all(|&c| c <= 1));
        for t in 0..m.n_triangles() {
            for (i, f) in m.triangle_faces(t).into_iter().enumerate() {
                let face = &m.faces()[f];
                let tri = m.triangles()[t];
                let mut e = [tri[(i + 1) % 3], tri[(i + 2) % 3]];
                e.sort();
                let mut fv = face.vertices;
                fv.sort();
                assert_eq!(e, fv);
                let n = m.outward_normal(t, f);
                if let FaceKind::Interior { left, right } = face.kind {
                    let other = if left == t { right } else { left };
                    let n_other = m.outward_normal(other, f);
                    assert_eq!(n, [-n_other[0], -n_other[1]]);
                }
            }
        }
    }

    #[test]
    fn initial_grid_shape() {
        let m = Mesh::initial_grid();
        assert_eq!(m.n_triangles(), 32);
        assert_eq!(m.n_vertices(), 25);
        assert!((m.h_max() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        check_invariants(&m);
        let c0 = m.chunkiness(0);
        // right isosceles triangle: h/ρ = √2 / (2 - √2)... computed directly
        let legs = 0.5;
        let hyp = legs * 2f64.sqrt();
        let expected = hyp / (4.0 * 0.5 * legs * legs / (2.0 * legs + hyp));
        assert!((c0 - expected).abs() < 1e-12);
        assert!((0..m.n_triangles()).all(|t| (m.chunkiness(t) - c0).abs() < 1e-12));
    }

    #[test]
    fn red_refinement() {
        let m0 = Mesh::initial_grid();
        let m1 = m0.refine_red();
        assert_eq!(m1.n_triangles(), 128);
        assert_eq!(m1.level(), 1);
        assert!((m1.h_max() - m0.h_max() / 2.0).abs() < 1e-15);
        check_invariants(&m1);
        for t in 0..m0.n_triangles() {
            let children: f64 = (0..4).map(|c| m1.area(4 * t + c)).sum();
            assert!((children - m0.area(t)).abs() < 1e-15);
        }
        let m2 = m1.refine_red();
        check_invariants(&m2);
        let c0 = m0.chunkiness(0);
        assert!((0..m2.n_triangles()).all(|t| (m2.chunkiness(t) - c0).abs() < 1e-10));
        // Euler: V - E + F = 1 for a disk
        assert_eq!(m2.n_vertices() + m2.n_triangles(), m2.faces().len() + 1);
    }

    #[test]
    fn refinement_is_conforming() {
        let m = Mesh::at_level(2);
        // every edge midpoint-free: no vertex lies strictly inside another triangle's edge
        for f in m.faces() {
            let a = m.vertices()[f.vertices[0]];
            let b = m.vertices()[f.vertices[1]];
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            assert!(!m.vertices().iter().any(|v| dist(*v, mid) < 1e-12));
        }
    }

    #[test]
    fn total_face_length_scaling() {
        let ratios: Vec<f64> = (0..4)
            .map(|l| {
                let m = Mesh::at_level(l);
                let total: f64 = m.faces().iter().map(|f| f.length).sum();
                m.h_max() * total / 4.0
            })
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max < 10.0, "{ratios:?}");
    }

    #[test]
    fn face_quadrature_rules() {
        let vertices = vec![[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [1.0, 0.0], [0.0, 1.0]];
        let m = Mesh::from_triangles(vertices, vec![[0, 1, 2]], 0).unwrap();
        let f = m
            .faces()
            .iter()
            .position(|f| {
                let mut v = f.vertices;
                v.sort();
                v == [0, 1]
            })
            .unwrap();
        let q = m.face_quadrature(f, 3).unwrap();
        assert!((q.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        assert!((q.length - 0.5).abs() < 1e-15);
        for p in &q.points {
            assert!(p[0] > 0.0 && p[0] < 0.5 && p[1] == 0.0);
        }

        let m = Mesh::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], 0).unwrap();
        let f = m.triangle_faces(0)[2];
        let q = m.face_quadrature(f, 3).unwrap();
        let int_x: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| p[0] * w).sum();
        assert!((int_x - 0.5).abs() < 1e-15);
        assert!(m.face_quadrature(99, 3).is_err());
    }

    #[test]
    fn text_dump_has_one_record_per_entity() {
        let m = Mesh::initial_grid();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("vertex")).count(), 25);
        assert_eq!(text.lines().filter(|l| l.starts_with("triangle")).count(), 32);
        assert_eq!(text.lines().filter(|l| l.starts_with("face")).count(), m.faces().len());
    }
}
