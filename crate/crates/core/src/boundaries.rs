//! Boundary treatments for links that leave the fluid.
//!
//! Each missing incoming population is rebuilt from post-collision values of
//! the previous step:
//!
//! * walls: Bouzidi linear interpolated bounce-back,
//! * velocity openings: momentum-corrected bounce-back (validation inlets),
//! * pressure openings: anti-bounce-back towards a target density.
//!
//! Notation: `i` is the direction from the fluid site into the boundary,
//! `ī` its opposite; the rule produces `f_ī(x_f, t + 1)`.

use crate::error::{Error, Result};
use crate::geometry::{IoletKind, VoxelDomain};
use crate::lbm::velocity_set::{C, OPPOSITE, Q, W};
use crate::scalar::Real;
use crate::tensor::{dot, sub, Vec3};
use crate::units::MAX_LATTICE_SPEED;
use log::warn;

/// Interpolation weights of one Bouzidi wall link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BouzidiWeights<T> {
    /// Weight of f_i*(x_f).
    pub own: T,
    /// Weight of the partner population: f_i*(x_f - c_i) when `q < 1/2`,
    /// f_ī*(x_f) otherwise.
    pub partner: T,
    pub uses_upstream: bool,
}

pub fn bouzidi_weights<T: Real>(q: T) -> BouzidiWeights<T> {
    let two = T::of(2.0);
    if q < T::of(0.5) {
        BouzidiWeights { own: two * q, partner: T::one() - two * q, uses_upstream: true }
    } else {
        BouzidiWeights { own: T::one() / (two * q), partner: (two * q - T::one()) / (two * q), uses_upstream: false }
    }
}

/// Incoming population at a wall-adjacent site.
///
/// `f_out` is f_i*(x_f), `f_upstream` is f_i*(x_f - c_i) (ignored for
/// q >= 1/2) and `f_opp` is f_ī*(x_f) (ignored for q < 1/2).
pub fn bouzidi_wall<T: Real>(q: T, f_out: T, f_upstream: T, f_opp: T) -> T {
    let w = bouzidi_weights(q);
    if w.uses_upstream {
        w.own * f_out + w.partner * f_upstream
    } else {
        w.own * f_out + w.partner * f_opp
    }
}

/// Momentum-corrected bounce-back against a moving boundary,
/// f_ī = f_i* - 2 w_i rho_0 (c_i . u_w) / cs^2 with rho_0 = 1.
pub fn velocity_inlet<T: Real>(dir: usize, f_out: T, u_wall: Vec3<T>) -> Result<T> {
    let speed = dot(u_wall, u_wall).sqrt();
    if !(speed < T::of(MAX_LATTICE_SPEED)) {
        return Err(Error::domain(format!("inlet speed {speed} breaks the lattice Mach limit")));
    }
    Ok(f_out - T::of(6.0 * W[dir]) * cdot(dir, u_wall))
}

/// Anti-bounce-back towards density `rho_b` with boundary velocity `u_e`.
pub fn pressure_iolet<T: Real>(dir: usize, f_out: T, rho_b: T, u_e: Vec3<T>) -> T {
    let cu = cdot(dir, u_e);
    let uu = dot(u_e, u_e);
    -f_out + T::of(2.0 * W[dir]) * rho_b * (T::one() + T::of(4.5) * cu * cu - T::of(1.5) * uu)
}

#[inline(always)]
fn cdot<T: Real>(dir: usize, v: Vec3<T>) -> T {
    T::of(C[dir][0] as f64) * v[0] + T::of(C[dir][1] as f64) * v[1] + T::of(C[dir][2] as f64) * v[2]
}

/// Parabolic velocity profile over a circular opening (lattice velocity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityProfile {
    /// Velocity on the axis (lattice units).
    pub peak: [f64; 3],
    /// Point on the axis (micrometres).
    pub center: [f64; 3],
    /// Unit axis direction.
    pub axis: [f64; 3],
    /// Radius of the analytic cross-section (micrometres).
    pub radius: f64,
}

impl VelocityProfile {
    pub fn at(&self, x: [f64; 3]) -> [f64; 3] {
        let d = sub(x, self.center);
        let along = dot(d, self.axis);
        let r2 = (dot(d, d) - along * along).max(0.0);
        let s = (1.0 - r2 / (self.radius * self.radius)).max(0.0);
        [self.peak[0] * s, self.peak[1] * s, self.peak[2] * s]
    }
}

/// Condition applied at one iolet of a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IoletCondition {
    /// Target lattice density.
    Pressure { density: f64 },
    Velocity(VelocityProfile),
}

impl IoletCondition {
    /// Pressure conditions from the densities stored in the domain.
    pub fn from_domain(domain: &VoxelDomain) -> Vec<IoletCondition> {
        domain.iolets.iter().map(|io| IoletCondition::Pressure { density: io.density }).collect()
    }

    /// Velocity at the inlet(s) with the given peak speed along the inward
    /// normal, pressure (stored density) at the outlets.
    pub fn velocity_inlets(domain: &VoxelDomain, peak_speed: f64) -> Vec<IoletCondition> {
        domain
            .iolets
            .iter()
            .map(|io| match io.kind {
                IoletKind::Inlet => IoletCondition::Velocity(VelocityProfile {
                    peak: [-io.normal[0] * peak_speed, -io.normal[1] * peak_speed, -io.normal[2] * peak_speed],
                    center: io.point,
                    axis: io.normal,
                    radius: io.radius,
                }),
                IoletKind::Outlet => IoletCondition::Pressure { density: io.density },
            })
            .collect()
    }
}

pub(crate) const NO_SOURCE: u32 = u32::MAX;

/// Rule filling one missing population at one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkRule<T> {
    /// f[dir] = a * post[own] + b * post[other] + add
    Linear { dir: u8, own: u32, other: u32, a: T, b: T, add: T },
    /// Anti-bounce-back; `up` is the compact index of x_f - c_i or the site itself.
    Pressure { dir: u8, own: u32, out: u8, rho: T, site: u32, up: u32 },
}

/// Per-site boundary rules in compact (fluid-only) indexing.
#[derive(Debug, Clone, Default)]
pub struct BoundaryRules<T> {
    pub offsets: Vec<u32>,
    pub rules: Vec<LinkRule<T>>,
    /// Wall links with q < 1/2 whose upstream site is solid.
    pub fallback_links: usize,
}

impl<T: Real> BoundaryRules<T> {
    pub fn for_site(&self, s: usize) -> &[LinkRule<T>] {
        &self.rules[self.offsets[s] as usize..self.offsets[s + 1] as usize]
    }
}

/// Builds the boundary rules for a domain. `compact[grid]` maps grid indices to
/// fluid indices (or `NO_SOURCE`).
pub(crate) fn build_rules<T: Real>(
    domain: &VoxelDomain,
    conditions: &[IoletCondition],
    compact: &[u32],
    fluid: &[usize],
) -> Result<BoundaryRules<T>> {
    if conditions.len() != domain.iolets.len() {
        return Err(Error::Config(format!(
            "{} iolet conditions given for {} iolets",
            conditions.len(),
            domain.iolets.len()
        )));
    }
    for c in conditions {
        match c {
            IoletCondition::Pressure { density } if !(*density > 0.0) => {
                return Err(Error::Config(format!("iolet density must be positive, got {density}")));
            }
            IoletCondition::Velocity(p) => {
                let s = dot(p.peak, p.peak).sqrt();
                if !(s < MAX_LATTICE_SPEED) {
                    return Err(Error::domain(format!("inlet peak speed {s} breaks the lattice Mach limit")));
                }
            }
            _ => {}
        }
    }
    let n = fluid.len();
    let mut per_site: Vec<Vec<LinkRule<T>>> = vec![Vec::new(); n];
    let mut fallback = 0usize;
    let post = |site: u32, dir: usize| site * Q as u32 + dir as u32;
    let upstream = |grid: usize, dir: usize| -> u32 {
        domain.neighbor(grid, OPPOSITE[dir]).map(|g| compact[g]).unwrap_or(NO_SOURCE)
    };

    for l in &domain.wall_links {
        let s = compact[l.site];
        let i = l.dir as usize;
        let opp = OPPOSITE[i];
        let w = bouzidi_weights(l.q);
        let rule = if w.uses_upstream {
            let up = upstream(l.site, i);
            if up == NO_SOURCE {
                fallback += 1;
                LinkRule::Linear { dir: opp as u8, own: post(s, i), other: post(s, i), a: T::one(), b: T::zero(), add: T::zero() }
            } else {
                LinkRule::Linear {
                    dir: opp as u8,
                    own: post(s, i),
                    other: post(up, i),
                    a: T::of(w.own),
                    b: T::of(w.partner),
                    add: T::zero(),
                }
            }
        } else {
            LinkRule::Linear { dir: opp as u8, own: post(s, i), other: post(s, opp), a: T::of(w.own), b: T::of(w.partner), add: T::zero() }
        };
        per_site[s as usize].push(rule);
    }
    if fallback > 0 {
        warn!("{fallback} wall links with q < 1/2 have no fluid upstream site; using plain bounce-back there");
    }

    for l in &domain.iolet_links {
        let s = compact[l.site];
        let i = l.dir as usize;
        let opp = OPPOSITE[i];
        let rule = match conditions[l.iolet as usize] {
            IoletCondition::Pressure { density } => {
                let up = upstream(l.site, i);
                LinkRule::Pressure {
                    dir: opp as u8,
                    own: post(s, i),
                    out: i as u8,
                    rho: T::of(density),
                    site: s,
                    up: if up == NO_SOURCE { s } else { up },
                }
            }
            IoletCondition::Velocity(profile) => {
                let x = domain.position(l.site);
                let hit = [
                    x[0] + l.q * C[i][0] as f64 * domain.dx,
                    x[1] + l.q * C[i][1] as f64 * domain.dx,
                    x[2] + l.q * C[i][2] as f64 * domain.dx,
                ];
                let u = profile.at(hit);
                let add = -6.0 * W[i] * (C[i][0] as f64 * u[0] + C[i][1] as f64 * u[1] + C[i][2] as f64 * u[2]);
                LinkRule::Linear { dir: opp as u8, own: post(s, i), other: post(s, i), a: T::one(), b: T::zero(), add: T::of(add) }
            }
        };
        per_site[s as usize].push(rule);
    }

    let mut offsets = Vec::with_capacity(n + 1);
    let mut rules = Vec::new();
    offsets.push(0u32);
    for r in per_site {
        rules.extend(r);
        offsets.push(rules.len() as u32);
    }
    Ok(BoundaryRules { offsets, rules, fallback_links: fallback })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_fraction_is_bounce_back() {
        for (fo, fu, fp) in [(0.1, 0.7, 0.3), (0.25, 0.0, 1.0)] {
            assert_eq!(bouzidi_wall(0.5, fo, fu, fp), fo);
        }
        let w = bouzidi_weights(0.5f64);
        assert_eq!((w.own, w.partner), (1.0, 0.0));
        let w = bouzidi_weights(0.5f64 - 1e-17);
        assert_eq!(w.own * 0.1 + w.partner * 0.9, 0.1);
    }

    #[test]
    fn full_fraction_averages() {
        let v = bouzidi_wall(1.0f64, 0.1, 99.0, 0.3);
        assert!((v - 0.2).abs() < 1e-15);
    }

    #[test]
    fn small_fraction_interpolates_upstream() {
        let v = bouzidi_wall(0.25f64, 0.2, 0.4, 99.0);
        assert!((v - (0.5 * 0.2 + 0.5 * 0.4)).abs() < 1e-15);
    }

    #[test]
    fn resting_inlet_is_bounce_back() {
        assert_eq!(velocity_inlet(7, 0.3, [0.0; 3]).unwrap(), 0.3);
        assert!(velocity_inlet(1, 0.3, [0.1, 0.0, 0.0]).is_err());
        // inflow along -x through a link pointing +x adds mass
        let v: f64 = velocity_inlet(1, 0.1, [-0.01, 0.0, 0.0]).unwrap();
        assert!((v - (0.1 + 6.0 / 9.0 * 0.01)).abs() < 1e-15);
    }

    #[test]
    fn inlet_peak_from_reynolds_number() {
        // |v_max| = nu Re / D with nu = 0.1, Re = 1, D = 10
        let peak = 0.1 * 1.0 / 10.0;
        assert!((peak - 0.01f64).abs() < 1e-16);
        let p = VelocityProfile { peak: [0.0, 0.0, -peak], center: [0.0; 3], axis: [0.0, 0.0, 1.0], radius: 5.0 };
        assert_eq!(p.at([0.0, 0.0, 3.0]), [0.0, 0.0, -peak]);
        assert_eq!(p.at([5.0, 0.0, 0.0])[2].abs(), 0.0);
        assert_eq!(p.at([3.0, 4.0, 0.0])[2].abs(), 0.0);
    }

    #[test]
    fn pressure_rule_at_rest_is_fixed_point() {
        // resting equilibrium at rho_b: f_i* = w_i rho_b
        for i in 1..Q {
            let rho = 1.03;
            let f = pressure_iolet(i, W[i] * rho, rho, [0.0; 3]);
            assert!((f - W[OPPOSITE[i]] * rho).abs() < 1e-15);
        }
    }
}
