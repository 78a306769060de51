//! Small fixed-size 2x2 tensors stored row-major.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A 2x2 tensor `[a11, a12, a21, a22]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tensor2(pub [f64; 4]);

/// Linear map on 2x2 tensors, `out[r] = sum_c m[r][c] * in[c]` in row-major
/// component order.
pub type Tensor4 = [[f64; 4]; 4];

impl Tensor2 {
    pub const ZERO: Tensor2 = Tensor2([0.0; 4]);
    pub const IDENTITY: Tensor2 = Tensor2([1.0, 0.0, 0.0, 1.0]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Tensor2([a11, a12, a21, a22])
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Tensor2([a, 0.0, 0.0, b])
    }

    /// `a ⊗ b`, i.e. `(a_i b_j)`.
    pub fn outer(a: [f64; 2], b: [f64; 2]) -> Self {
        Tensor2([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[2 * i + j]
    }

    pub fn transpose(&self) -> Self {
        let a = self.0;
        Tensor2([a[0], a[2], a[1], a[3]])
    }

    pub fn sym(&self) -> Self {
        let a = self.0;
        let off = 0.5 * (a[1] + a[2]);
        Tensor2([a[0], off, off, a[3]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[3]
    }

    /// Frobenius product `A : B`.
    pub fn dot(&self, other: &Tensor2) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Tensor2(self.0.map(|a| a * s))
    }

    pub fn matmul(&self, other: &Tensor2) -> Self {
        let a = self.0;
        let b = other.0;
        Tensor2([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }

    /// `A v`.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let a = self.0;
        [a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]]
    }
}

impl Add for Tensor2 {
    type Output = Tensor2;
    fn add(self, rhs: Tensor2) -> Tensor2 {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        Tensor2(out)
    }
}

impl AddAssign for Tensor2 {
    fn add_assign(&mut self, rhs: Tensor2) {
        for (o, r) in self.0.iter_mut().zip(rhs.0) {
            *o += r;
        }
    }
}

impl Sub for Tensor2 {
    type Output = Tensor2;
    fn sub(self, rhs: Tensor2) -> Tensor2 {
        self + (-rhs)
    }
}

impl Neg for Tensor2 {
    type Output = Tensor2;
    fn neg(self) -> Tensor2 {
        Tensor2(self.0.map(|a| -a))
    }
}

impl Mul<f64> for Tensor2 {
    type Output = Tensor2;
    fn mul(self, s: f64) -> Tensor2 {
        self.scale(s)
    }
}

/// Apply a fourth-order tensor to a second-order one.
pub fn apply4(m: &Tensor4, b: &Tensor2) -> Tensor2 {
    let mut out = [0.0; 4];
    for (r, row) in m.iter().enumerate() {
        out[r] = row.iter().zip(b.0.iter()).map(|(x, y)| x * y).sum();
    }
    Tensor2(out)
}

/// The map `B -> B^sym` as a fourth-order tensor.
pub fn symmetrizer() -> Tensor4 {
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

pub fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm2(a: [f64; 2]) -> f64 {
    dot2(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_and_transpose() {
        let a = Tensor2::new(1.0, 2.0, 4.0, 3.0);
        assert_eq!(a.sym(), Tensor2::new(1.0, 3.0, 3.0, 3.0));
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(apply4(&symmetrizer(), &a), a.sym());
    }

    #[test]
    fn outer_contracts_like_dot_products() {
        let a = [1.0, -2.0];
        let b = [0.5, 3.0];
        let c = Tensor2::new(1.0, 2.0, 3.0, 4.0);
        let direct = a[0] * (c.get(0, 0) * b[0] + c.get(0, 1) * b[1])
            + a[1] * (c.get(1, 0) * b[0] + c.get(1, 1) * b[1]);
        assert!((Tensor2::outer(a, b).dot(&c) - direct).abs() < 1e-14);
        assert!((Tensor2::outer(a, b).trace() - dot2(a, b)).abs() < 1e-14);
    }
}
