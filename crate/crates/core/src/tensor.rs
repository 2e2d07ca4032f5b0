//! Small fixed-size vector and symmetric-tensor helpers.

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];

#[inline(always)]
pub fn dot<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline(always)]
pub fn norm<T: Real>(a: Vec3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline(always)]
pub fn sub<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline(always)]
pub fn add<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline(always)]
pub fn scale<T: Real>(a: Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn cross<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn normalize<T: Real>(a: Vec3<T>) -> Option<Vec3<T>> {
    let n = norm(a);
    if n > T::zero() && n.is_finite() {
        Some(scale(a, T::one() / n))
    } else {
        None
    }
}

/// Symmetric 3x3 tensor stored as (xx, yy, zz, xy, xz, yz).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym3<T>(pub [T; 6]);

impl<T: Real> Sym3<T> {
    pub fn zero() -> Self {
        Sym3([T::zero(); 6])
    }

    pub fn from_matrix(m: [[T; 3]; 3]) -> Self {
        let h = T::of(0.5);
        Sym3([m[0][0], m[1][1], m[2][2], h * (m[0][1] + m[1][0]), h * (m[0][2] + m[2][0]), h * (m[1][2] + m[2][1])])
    }

    pub fn to_matrix(&self) -> [[T; 3]; 3] {
        let [xx, yy, zz, xy, xz, yz] = self.0;
        [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.to_matrix()[i][j]
    }

    /// Double contraction S:S.
    #[inline(always)]
    pub fn contract(&self) -> T {
        let [xx, yy, zz, xy, xz, yz] = self.0;
        xx * xx + yy * yy + zz * zz + T::of(2.0) * (xy * xy + xz * xz + yz * yz)
    }

    pub fn frobenius(&self) -> T {
        self.contract().sqrt()
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut o = self.0;
        for v in o.iter_mut() {
            *v = *v * s;
        }
        Sym3(o)
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut o = self.0;
        for (v, w) in o.iter_mut().zip(other.0.iter()) {
            *v = *v - *w;
        }
        Sym3(o)
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        let m = self.to_matrix();
        [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
    }

    /// R S R^T for a rotation given by its columns' matrix `r` (row-major).
    pub fn rotated(&self, r: &[[T; 3]; 3]) -> Self {
        let s = self.to_matrix();
        let mut out = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = T::zero();
                for k in 0..3 {
                    for l in 0..3 {
                        acc = acc + r[i][k] * s[k][l] * r[j][l];
                    }
                }
                out[i][j] = acc;
            }
        }
        Sym3::from_matrix(out)
    }
}
