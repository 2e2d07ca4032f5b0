//! Site-local lattice-Boltzmann operations: equilibrium, LBGK relaxation and
//! moment recovery. Nothing in here reads a neighbouring site.

use super::velocity_set::{C, Q, W};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::{Sym3, Vec3};

/// Second-order truncated Maxwellian.
#[inline(always)]
pub fn equilibrium<T: Real>(rho: T, u: Vec3<T>) -> [T; Q] {
    let three = T::of(3.0);
    let four_half = T::of(4.5);
    let usq = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]) * T::of(1.5);
    let mut feq = [T::zero(); Q];
    for i in 0..Q {
        let cu = T::of(C[i][0] as f64) * u[0] + T::of(C[i][1] as f64) * u[1] + T::of(C[i][2] as f64) * u[2];
        feq[i] = rho * T::of(W[i]) * (T::one() + three * cu + four_half * cu * cu - usq);
    }
    feq
}

/// Density and velocity moments without validity checks.
#[inline(always)]
pub fn moments<T: Real>(f: &[T; Q]) -> (T, Vec3<T>) {
    // explicit sums over the D3Q15 vectors
    let rho = f.iter().copied().sum::<T>();
    let jx = f[1] - f[2] + f[7] - f[8] + f[9] - f[10] + f[11] - f[12] - f[13] + f[14];
    let jy = f[3] - f[4] + f[7] - f[8] + f[9] - f[10] - f[11] + f[12] + f[13] - f[14];
    let jz = f[5] - f[6] + f[7] - f[8] - f[9] + f[10] + f[11] - f[12] + f[13] - f[14];
    let inv = T::one() / rho;
    (rho, [jx * inv, jy * inv, jz * inv])
}

/// Density and velocity, rejecting non-positive or non-finite density.
pub fn macroscopics<T: Real>(f: &[T; Q]) -> Result<(T, Vec3<T>)> {
    let (rho, u) = moments(f);
    if !(rho > T::zero()) || !rho.is_finite() {
        return Err(Error::Instability { step: 0, detail: format!("density {rho}"), last_stable: None });
    }
    Ok((rho, u))
}

/// LBGK relaxation f* = f - (f - f_eq) / tau.
#[inline(always)]
pub fn collide<T: Real>(f: &[T; Q], feq: &[T; Q], tau: T) -> [T; Q] {
    let omega = T::one() / tau;
    let mut out = [T::zero(); Q];
    for i in 0..Q {
        out[i] = f[i] - (f[i] - feq[i]) * omega;
    }
    out
}

/// Second moment of the non-equilibrium part, sum_i (f_i - f_eq_i) c_i c_i.
#[inline(always)]
pub fn noneq_second_moment<T: Real>(f: &[T; Q], feq: &[T; Q]) -> Sym3<T> {
    let mut d = [T::zero(); Q];
    for i in 0..Q {
        d[i] = f[i] - feq[i];
    }
    // all corner vectors contribute 1 to every diagonal entry
    let corners = d[7] + d[8] + d[9] + d[10] + d[11] + d[12] + d[13] + d[14];
    let xx = d[1] + d[2] + corners;
    let yy = d[3] + d[4] + corners;
    let zz = d[5] + d[6] + corners;
    // products c_x c_y etc. of the corner vectors
    let xy = d[7] + d[8] + d[9] + d[10] - d[11] - d[12] - d[13] - d[14];
    let xz = d[7] + d[8] - d[9] - d[10] + d[11] + d[12] - d[13] - d[14];
    let yz = d[7] + d[8] - d[9] - d[10] - d[11] - d[12] + d[13] + d[14];
    Sym3([xx, yy, zz, xy, xz, yz])
}

/// Strain-rate tensor from the local non-equilibrium moment,
/// S = -Pi_neq / (2 tau cs^2 rho).
#[inline(always)]
pub fn strain_rate<T: Real>(pi_neq: &Sym3<T>, rho: T, tau: T) -> Sym3<T> {
    // 2 cs^2 = 2/3
    pi_neq.scaled(-T::of(1.5) / (tau * rho))
}

/// Scalar shear rate sqrt(2 S:S).
#[inline(always)]
pub fn shear_rate<T: Real>(s: &Sym3<T>) -> T {
    (T::of(2.0) * s.contract()).sqrt()
}

/// Strain rate and shear rate of a population set.
pub fn shear_from_noneq<T: Real>(f: &[T; Q], tau: T) -> (Sym3<T>, T) {
    let (rho, u) = moments(f);
    let feq = equilibrium(rho, u);
    let s = strain_rate(&noneq_second_moment(f, &feq), rho, tau);
    let g = shear_rate(&s);
    (s, g)
}

/// Deviatoric stress T = 2 eta S.
pub fn stress<T: Real>(s: &Sym3<T>, eta: T) -> Sym3<T> {
    s.scaled(T::of(2.0) * eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lbm::velocity_set::OPPOSITE;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn first_moments(f: &[f64; Q]) -> (f64, [f64; 3]) {
        let mut rho = 0.0;
        let mut j = [0.0; 3];
        for i in 0..Q {
            rho += f[i];
            for a in 0..3 {
                j[a] += f[i] * C[i][a] as f64;
            }
        }
        (rho, j)
    }

    #[test]
    fn rest_equilibrium_is_weights() {
        let f = equilibrium(1.0, [0.0; 3]);
        for i in 0..Q {
            assert_eq!(f[i], W[i]);
        }
    }

    #[test]
    fn equilibrium_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let rho = rng.gen_range(0.8..1.2);
            let u = [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)];
            let f = equilibrium(rho, u);
            let (r, j) = first_moments(&f);
            assert!((r - rho).abs() < 1e-14);
            for a in 0..3 {
                assert!((j[a] - rho * u[a]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn drift_asymmetry() {
        let f = equilibrium(1.0, [0.05, 0.0, 0.0]);
        assert!(f[1] > f[2]);
        assert!(f[7] > f[8]);
        assert!(f[OPPOSITE[13]] > f[13]);
    }

    #[test]
    fn explicit_moment_sums_match_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut f = [0.0; Q];
        for v in f.iter_mut() {
            *v = rng.gen_range(0.01..0.2);
        }
        let (rho, u) = moments(&f);
        let (r, j) = first_moments(&f);
        assert!((rho - r).abs() < 1e-15);
        for a in 0..3 {
            assert!((u[a] * rho - j[a]).abs() < 1e-15);
        }
        let feq = equilibrium(rho, u);
        let pi = noneq_second_moment(&f, &feq);
        for a in 0..3 {
            for b in 0..3 {
                let want: f64 = (0..Q).map(|i| (f[i] - feq[i]) * (C[i][a] * C[i][b]) as f64).sum();
                assert!((pi.get(a, b) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn macroscopics_recovers_equilibrium_state() {
        let f = equilibrium(1.05f64, [0.02, 0.0, -0.01]);
        let (rho, u) = macroscopics(&f).unwrap();
        assert!((rho - 1.05).abs() < 1e-15);
        assert!((u[0] - 0.02).abs() < 1e-15 && u[1].abs() < 1e-15 && (u[2] + 0.01).abs() < 1e-15);
        let (rho, u) = macroscopics(&W).unwrap();
        assert!((rho - 1.0).abs() < 1e-15 && u.iter().all(|x| x.abs() < 1e-16));
        assert!(macroscopics(&[0.0; Q]).is_err());
    }

    #[test]
    fn collision_fixed_point_and_full_relaxation() {
        let feq = equilibrium(1.02, [0.01, -0.02, 0.03]);
        assert_eq!(collide(&feq, &feq, 0.8), feq);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut f = feq;
        for v in f.iter_mut() {
            *v *= 1.0 + rng.gen_range(-0.05..0.05);
        }
        let (rho, u) = moments(&f);
        let feq = equilibrium(rho, u);
        assert_eq!(collide(&f, &feq, 1.0), feq);
    }

    #[test]
    fn collision_conserves_mass_and_momentum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let base = equilibrium(rng.gen_range(0.9..1.1), [rng.gen_range(-0.05..0.05), 0.01, -0.02]);
            let mut f = base;
            for v in f.iter_mut() {
                *v *= 1.0 + rng.gen_range(-0.1..0.1);
            }
            let (rho, u) = moments(&f);
            let feq = equilibrium(rho, u);
            let tau = rng.gen_range(0.51..2.0);
            let post = collide(&f, &feq, tau);
            let (r0, j0) = first_moments(&f);
            let (r1, j1) = first_moments(&post);
            assert!((r0 - r1).abs() < 1e-13);
            for a in 0..3 {
                assert!((j0[a] - j1[a]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn equilibrium_has_no_shear() {
        let f = equilibrium(1.0, [0.03, 0.01, 0.0]);
        let (s, g) = shear_from_noneq(&f, 0.8);
        assert!(s.frobenius() < 1e-14);
        assert!(g < 1e-14);
    }

    #[test]
    fn shear_rate_is_frame_invariant() {
        // Build f = f_eq + f_neq where f_neq has a prescribed second moment,
        // then rotate that moment and rebuild.
        let pi = Sym3([0.001, -0.0004, -0.0006, 0.0007, -0.0003, 0.0005]);
        let build = |pi: &Sym3<f64>| {
            let feq = equilibrium(1.0, [0.0; 3]);
            let mut f = feq;
            // f_neq_i = w_i / (2 cs^4) (c_i c_i - cs^2 I) : Pi reproduces Pi for traceless-free parts
            for i in 0..Q {
                let mut q = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        let d = if a == b { 1.0 / 3.0 } else { 0.0 };
                        q += ((C[i][a] * C[i][b]) as f64 - d) * pi.get(a, b);
                    }
                }
                f[i] += W[i] * 4.5 * q;
            }
            f
        };
        let theta: f64 = 0.7;
        let (s, c) = theta.sin_cos();
        let phi: f64 = -0.4;
        let (s2, c2) = phi.sin_cos();
        let rz = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let rx = [[1.0, 0.0, 0.0], [0.0, c2, -s2], [0.0, s2, c2]];
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|k| rz[i][k] * rx[k][j]).sum();
            }
        }
        let (_, g0) = shear_from_noneq(&build(&pi), 0.8);
        let (_, g1) = shear_from_noneq(&build(&pi.rotated(&r)), 0.8);
        assert!(g0 > 0.0);
        assert!((g0 - g1).abs() < 1e-10, "{g0} {g1}");
    }
}
