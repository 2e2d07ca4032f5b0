//! D3Q15 velocity set.

use crate::scalar::Real;

pub const Q: usize = 15;

/// Lattice vectors: rest, six faces, eight corners. Opposite directions sit in
/// adjacent (odd, even) slots.
pub const C: [[i32; 3]; Q] = [
    [0, 0, 0],
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
    [1, 1, 1],
    [-1, -1, -1],
    [1, 1, -1],
    [-1, -1, 1],
    [1, -1, 1],
    [-1, 1, -1],
    [-1, 1, 1],
    [1, -1, -1],
];

pub const W: [f64; Q] = [
    2.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 72.0,
    1.0 / 72.0,
    1.0 / 72.0,
    1.0 / 72.0,
    1.0 / 72.0,
    1.0 / 72.0,
    1.0 / 72.0,
    1.0 / 72.0,
];

pub const OPPOSITE: [usize; Q] = [0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13];

/// Squared lattice sound speed.
pub const CS2: f64 = 1.0 / 3.0;

/// Typed view of the velocity set for a scalar type.
#[derive(Debug, Clone, Copy)]
pub struct VelocitySet<T> {
    pub c: [[T; 3]; Q],
    pub w: [T; Q],
    pub opposite: [usize; Q],
    pub cs2: T,
}

impl<T: Real> VelocitySet<T> {
    pub fn new() -> Self {
        let mut c = [[T::zero(); 3]; Q];
        let mut w = [T::zero(); Q];
        for i in 0..Q {
            for a in 0..3 {
                c[i][a] = T::of(C[i][a] as f64);
            }
            w[i] = T::of(W[i]);
        }
        Self { c, w, opposite: OPPOSITE, cs2: T::of(CS2) }
    }
}

impl<T: Real> Default for VelocitySet<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Index of the lattice vector equal to `v`, if any.
pub fn direction_of(v: [i32; 3]) -> Option<usize> {
    C.iter().position(|c| *c == v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_moments() {
        let s: f64 = W.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        for a in 0..3 {
            let m: f64 = (0..Q).map(|i| W[i] * C[i][a] as f64).sum();
            assert!(m.abs() < 1e-15);
            for b in 0..3 {
                let m2: f64 = (0..Q).map(|i| W[i] * (C[i][a] * C[i][b]) as f64).sum();
                let want = if a == b { CS2 } else { 0.0 };
                assert!((m2 - want).abs() < 1e-15, "{a}{b}: {m2}");
            }
        }
    }

    #[test]
    fn opposites() {
        for i in 0..Q {
            let o = OPPOSITE[i];
            assert_eq!(OPPOSITE[o], i);
            for a in 0..3 {
                assert_eq!(C[o][a], -C[i][a]);
            }
        }
        assert_eq!(direction_of([1, -1, 1]), Some(11));
        assert_eq!(direction_of([1, 1, 0]), None);
    }
}
