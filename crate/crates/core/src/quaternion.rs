//! Quaternions and the block matrices of ℍ^{m+1} ≅ ℝ^{4m+4}.
//!
//! Real coordinates are ordered `(1, i, j, k)` within each quaternion block.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const ONE: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const I: Quat = Quat { w: 0.0, x: 1.0, y: 0.0, z: 0.0 };
    pub const J: Quat = Quat { w: 0.0, x: 0.0, y: 1.0, z: 0.0 };
    pub const K: Quat = Quat { w: 0.0, x: 0.0, y: 0.0, z: 1.0 };
    pub const ZERO: Quat = Quat { w: 0.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(s[0], s[1], s[2], s[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm2(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn inv(self) -> Self {
        let n = self.norm2();
        let c = self.conj();
        Self::new(c.w / n, c.x / n, c.y / n, c.z / n)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Imaginary part as a quaternion.
    pub fn im(self) -> Self {
        Self::new(0.0, self.x, self.y, self.z)
    }

    /// `exp` of an imaginary quaternion `v`: `cos|v| + sin|v| v/|v|`.
    pub fn exp_im(v: Quat) -> Self {
        let t = v.norm2().sqrt();
        if t == 0.0 {
            return Self::ONE;
        }
        let s = t.sin() / t;
        Self::new(t.cos(), v.x * s, v.y * s, v.z * s)
    }

    /// Imaginary units `[i, j, k]`.
    pub fn units() -> [Quat; 3] {
        [Self::I, Self::J, Self::K]
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, r: Quat) -> Quat {
        Quat::new(
            self.w * r.w - self.x * r.x - self.y * r.y - self.z * r.z,
            self.w * r.x + self.x * r.w + self.y * r.z - self.z * r.y,
            self.w * r.y - self.x * r.z + self.y * r.w + self.z * r.x,
            self.w * r.z + self.x * r.y - self.y * r.x + self.z * r.w,
        )
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, r: Quat) -> Quat {
        Quat::new(self.w + r.w, self.x + r.x, self.y + r.y, self.z + r.z)
    }
}

impl Sub for Quat {
    type Output = Quat;
    fn sub(self, r: Quat) -> Quat {
        Quat::new(self.w - r.w, self.x - r.x, self.y - r.y, self.z - r.z)
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        self.scale(-1.0)
    }
}

/// 4×4 matrix of `v ↦ q v`, row-major.
pub fn left_matrix(q: Quat) -> [f64; 16] {
    let mut m = [0.0; 16];
    for (c, e) in [Quat::ONE, Quat::I, Quat::J, Quat::K].into_iter().enumerate() {
        let col = (q * e).to_array();
        for r in 0..4 {
            m[r * 4 + c] = col[r];
        }
    }
    m
}

/// 4×4 matrix of `v ↦ v q`, row-major.
pub fn right_matrix(q: Quat) -> [f64; 16] {
    let mut m = [0.0; 16];
    for (c, e) in [Quat::ONE, Quat::I, Quat::J, Quat::K].into_iter().enumerate() {
        let col = (e * q).to_array();
        for r in 0..4 {
            m[r * 4 + c] = col[r];
        }
    }
    m
}

/// Block-diagonal `N × N` matrix (`N = 4·blocks`) repeating a 4×4 block.
pub fn block_diag(block: &[f64; 16], blocks: usize) -> Vec<f64> {
    let n = 4 * blocks;
    let mut m = vec![0.0; n * n];
    for b in 0..blocks {
        for r in 0..4 {
            for c in 0..4 {
                m[(4 * b + r) * n + 4 * b + c] = block[r * 4 + c];
            }
        }
    }
    m
}

/// Left multiplication by `q` on ℍ^{blocks}.
pub fn left_mult(q: Quat, blocks: usize) -> Vec<f64> {
    block_diag(&left_matrix(q), blocks)
}

/// Right multiplication by `q` on ℍ^{blocks}.
pub fn right_mult(q: Quat, blocks: usize) -> Vec<f64> {
    block_diag(&right_matrix(q), blocks)
}

/// Diagonal form `diag(+1 ×4p, −1 ×4q)`.
pub fn standard_form(p: usize, q: usize) -> Vec<f64> {
    let n = 4 * (p + q);
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = if i < 4 * p { 1.0 } else { -1.0 };
    }
    m
}

/// Quaternion blocks of a real vector of length `4·blocks`.
pub fn to_quats(v: &[f64]) -> Vec<Quat> {
    v.chunks(4).map(Quat::from_slice).collect()
}

pub fn from_quats(q: &[Quat]) -> Vec<f64> {
    q.iter().flat_map(|x| x.to_array()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul, max_abs_diff};

    #[test]
    fn hamilton_relations() {
        assert_eq!(Quat::I * Quat::J, Quat::K);
        assert_eq!(Quat::J * Quat::K, Quat::I);
        assert_eq!(Quat::K * Quat::I, Quat::J);
        assert_eq!(Quat::I * Quat::I, -Quat::ONE);
    }

    #[test]
    fn left_multiplication_is_a_representation() {
        let (li, lj, lk) = (left_mult(Quat::I, 2), left_mult(Quat::J, 2), left_mult(Quat::K, 2));
        assert!(max_abs_diff(&matmul(&li, &lj, 8), &lk) == 0.0);
        let (ri, rj, rk) = (right_mult(Quat::I, 1), right_mult(Quat::J, 1), right_mult(Quat::K, 1));
        let neg: Vec<f64> = rk.iter().map(|x| -x).collect();
        assert!(max_abs_diff(&matmul(&ri, &rj, 4), &neg) == 0.0);
    }

    #[test]
    fn inverse_and_exp() {
        let q = Quat::new(0.3, -1.0, 0.5, 2.0);
        let e = q * q.inv();
        assert!((e.w - 1.0).abs() < 1e-15 && e.im().norm2() < 1e-30);
        let u = Quat::exp_im(Quat::new(0.0, 0.1, 0.2, -0.3));
        assert!((u.norm2() - 1.0).abs() < 1e-15);
    }
}
