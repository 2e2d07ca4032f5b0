//! Sparse D3Q15 solver over the fluid sites of a [`VoxelDomain`].
//!
//! Populations are stored post-collision. One step gathers the post-collision
//! values of the upstream neighbours (or rebuilds them through the boundary
//! rules), relaxes them and writes the result into the other buffer. The
//! relaxation time used at step `t` is the one computed from the shear rate
//! of step `t - 1`.

use super::kernel::{equilibrium, noneq_second_moment, shear_rate, strain_rate};
use super::velocity_set::{C, OPPOSITE, Q, W};
use crate::boundaries::{build_rules, BoundaryRules, IoletCondition, LinkRule, NO_SOURCE};
use crate::error::{Error, Result, StableFields};
use crate::geometry::VoxelDomain;
use crate::rheology::Rheology;
use crate::scalar::Real;
use crate::tensor::{Sym3, Vec3};
use rayon::prelude::*;

/// Sites handed to one rayon task.
const CHUNK: usize = 512;

/// Macroscopic state of one site, computed during its last collision.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SiteMacro<T> {
    pub rho: T,
    pub u: Vec3<T>,
    pub strain: Sym3<T>,
    pub shear_rate: T,
    /// Relaxation time for the next collision.
    pub tau: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Worker threads; `None` uses the rayon default (or `CAPLB_THREADS`).
    pub workers: Option<usize>,
    /// Uniform body force density (lattice units).
    pub body_force: [f64; 3],
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { workers: None, body_force: [0.0; 3] }
    }
}

/// Worker count from `CAPLB_THREADS`, if set to a positive integer.
pub fn env_workers() -> Option<usize> {
    std::env::var("CAPLB_THREADS").ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

/// Double-buffered populations and macroscopic fields plus the step counter.
#[derive(Debug, Clone)]
pub struct LatticeState<T> {
    post: [Vec<T>; 2],
    macros: [Vec<SiteMacro<T>>; 2],
    cur: usize,
    pub step: u64,
}

impl<T: Real> LatticeState<T> {
    pub fn populations(&self) -> &[T] {
        &self.post[self.cur]
    }

    pub fn macros(&self) -> &[SiteMacro<T>] {
        &self.macros[self.cur]
    }
}

pub struct Solver<T> {
    fluid: Vec<usize>,
    compact: Vec<u32>,
    src: Vec<u32>,
    rules: BoundaryRules<T>,
    rheology: Rheology<T>,
    force: Vec3<T>,
    has_force: bool,
    state: LatticeState<T>,
    pool: Option<rayon::ThreadPool>,
    dims: [usize; 3],
}

struct StepCtx<'a, T> {
    src: &'a [u32],
    rules: &'a BoundaryRules<T>,
    post: &'a [T],
    macros: &'a [SiteMacro<T>],
    rheology: Rheology<T>,
    force: Vec3<T>,
    has_force: bool,
}

#[inline(always)]
fn cdot<T: Real>(i: usize, v: Vec3<T>) -> T {
    T::of(C[i][0] as f64) * v[0] + T::of(C[i][1] as f64) * v[1] + T::of(C[i][2] as f64) * v[2]
}

impl<'a, T: Real> StepCtx<'a, T> {
    /// Incoming populations of site `s` for the next collision.
    #[inline(always)]
    fn gather(&self, s: usize) -> [T; Q] {
        let mut f = [T::zero(); Q];
        let src = &self.src[s * Q..s * Q + Q];
        for i in 0..Q {
            let k = src[i];
            if k != NO_SOURCE {
                f[i] = self.post[k as usize];
            }
        }
        for rule in self.rules.for_site(s) {
            match *rule {
                LinkRule::Linear { dir, own, other, a, b, add } => {
                    f[dir as usize] = a * self.post[own as usize] + b * self.post[other as usize] + add;
                }
                LinkRule::Pressure { dir, own, out, rho, site, up } => {
                    let u0 = self.macros[site as usize].u;
                    let ue = if up == site {
                        u0
                    } else {
                        let u1 = self.macros[up as usize].u;
                        let (a, b) = (T::of(1.5), T::of(0.5));
                        [a * u0[0] - b * u1[0], a * u0[1] - b * u1[1], a * u0[2] - b * u1[2]]
                    };
                    let i = out as usize;
                    let cu = cdot(i, ue);
                    let uu = ue[0] * ue[0] + ue[1] * ue[1] + ue[2] * ue[2];
                    f[dir as usize] = -self.post[own as usize]
                        + T::of(2.0 * W[i]) * rho * (T::one() + T::of(4.5) * cu * cu - T::of(1.5) * uu);
                }
            }
        }
        f
    }

    /// LBGK relaxation with relaxation time `tau`; returns the post-collision
    /// populations and the macroscopic state including the next `tau`.
    #[inline(always)]
    fn relax(&self, f: &[T; Q], tau: T) -> ([T; Q], SiteMacro<T>) {
        relax_site(f, tau, &self.rheology, self.force, self.has_force)
    }
}

#[inline(always)]
fn relax_site<T: Real>(f: &[T; Q], tau: T, rheology: &Rheology<T>, force: Vec3<T>, has_force: bool) -> ([T; Q], SiteMacro<T>) {
    let (rho, mut u) = super::kernel::moments(f);
    if has_force {
        let h = T::of(0.5) / rho;
        u = [u[0] + h * force[0], u[1] + h * force[1], u[2] + h * force[2]];
    }
    let feq = equilibrium(rho, u);
    let strain = strain_rate(&noneq_second_moment(f, &feq), rho, tau);
    let g = shear_rate(&strain);
    let omega = T::one() / tau;
    let mut out = [T::zero(); Q];
    for i in 0..Q {
        out[i] = f[i] - (f[i] - feq[i]) * omega;
    }
    if has_force {
        let pref = T::one() - T::of(0.5) * omega;
        let uf = u[0] * force[0] + u[1] * force[1] + u[2] * force[2];
        for i in 0..Q {
            let cu = cdot(i, u);
            let cf = cdot(i, force);
            out[i] = out[i] + pref * T::of(W[i]) * (T::of(3.0) * (cf - uf) + T::of(9.0) * cu * cf);
        }
    }
    let m = SiteMacro { rho, u, strain, shear_rate: g, tau: rheology.tau(g) };
    (out, m)
}

impl<T: Real> Solver<T> {
    /// Builds the solver on the fluid sites of `domain`, initialised at rest
    /// with unit density.
    pub fn new(domain: &VoxelDomain, conditions: &[IoletCondition], rheology: Rheology<T>, opts: SolverOptions) -> Result<Self> {
        let fluid: Vec<usize> = domain.fluid_sites().collect();
        if fluid.is_empty() {
            return Err(Error::Geometry("domain has no fluid sites".into()));
        }
        if fluid.len() as u64 * Q as u64 >= NO_SOURCE as u64 {
            return Err(Error::Geometry(format!("{} fluid sites exceed the solver index range", fluid.len())));
        }
        let tau0 = rheology.tau_at_rest();
        if !(tau0 > T::of(0.5)) {
            return Err(Error::Instability { step: 0, detail: format!("relaxation time {tau0} <= 1/2"), last_stable: None });
        }
        let mut compact = vec![NO_SOURCE; domain.site_count()];
        for (k, &g) in fluid.iter().enumerate() {
            compact[g] = k as u32;
        }
        // a population arriving along c_i comes from x - c_i
        let mut src = vec![NO_SOURCE; fluid.len() * Q];
        for (k, &g) in fluid.iter().enumerate() {
            src[k * Q] = (k * Q) as u32;
            for i in 1..Q {
                if let Some(n) = domain.neighbor(g, OPPOSITE[i]) {
                    let c = compact[n];
                    if c != NO_SOURCE {
                        src[k * Q + i] = c * Q as u32 + i as u32;
                    }
                }
            }
        }
        let rules = build_rules::<T>(domain, conditions, &compact, &fluid)?;
        // every closed incoming link must be filled by exactly one rule
        for (k, _) in fluid.iter().enumerate() {
            let mut filled = [false; Q];
            for i in 0..Q {
                filled[i] = src[k * Q + i] != NO_SOURCE;
            }
            for r in rules.for_site(k) {
                let d = match *r {
                    LinkRule::Linear { dir, .. } | LinkRule::Pressure { dir, .. } => dir as usize,
                };
                if filled[d] {
                    return Err(Error::Geometry(format!("site {} direction {d} filled twice", fluid[k])));
                }
                filled[d] = true;
            }
            if let Some(d) = filled.iter().position(|f| !f) {
                return Err(Error::Geometry(format!("site {} direction {d} has no source", fluid[k])));
            }
        }
        let workers = opts.workers.or_else(env_workers);
        let pool = match workers {
            Some(n) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
            ),
            None => None,
        };
        let n = fluid.len();
        let rest = equilibrium(T::one(), [T::zero(); 3]);
        let mut post = vec![T::zero(); n * Q];
        for k in 0..n {
            post[k * Q..k * Q + Q].copy_from_slice(&rest);
        }
        let m = SiteMacro { rho: T::one(), u: [T::zero(); 3], strain: Sym3::zero(), shear_rate: T::zero(), tau: tau0 };
        let macros = vec![m; n];
        let force = [T::of(opts.body_force[0]), T::of(opts.body_force[1]), T::of(opts.body_force[2])];
        Ok(Solver {
            fluid,
            compact,
            src,
            rules,
            rheology,
            force,
            has_force: opts.body_force.iter().any(|&f| f != 0.0),
            state: LatticeState { post: [post.clone(), post], macros: [macros.clone(), macros], cur: 0, step: 0 },
            pool,
            dims: domain.dims,
        })
    }

    pub fn site_count(&self) -> usize {
        self.fluid.len()
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Grid index of compact site `s`.
    pub fn grid_index(&self, s: usize) -> usize {
        self.fluid[s]
    }

    pub fn grid_indices(&self) -> &[usize] {
        &self.fluid
    }

    /// Compact index of a grid site, if it is fluid.
    pub fn site_of_grid(&self, grid: usize) -> Option<usize> {
        self.compact.get(grid).copied().filter(|&c| c != NO_SOURCE).map(|c| c as usize)
    }

    pub fn rheology(&self) -> &Rheology<T> {
        &self.rheology
    }

    pub fn state(&self) -> &LatticeState<T> {
        &self.state
    }

    pub fn step_count(&self) -> u64 {
        self.state.step
    }

    pub fn boundary_rules(&self) -> &BoundaryRules<T> {
        &self.rules
    }

    pub fn macros(&self) -> &[SiteMacro<T>] {
        self.state.macros()
    }

    pub fn site(&self, s: usize) -> &SiteMacro<T> {
        &self.state.macros()[s]
    }

    /// Post-collision populations of site `s`.
    pub fn populations(&self, s: usize) -> [T; Q] {
        let mut f = [T::zero(); Q];
        f.copy_from_slice(&self.state.populations()[s * Q..s * Q + Q]);
        f
    }

    /// Populations site `s` would receive at the next step (boundary rules
    /// applied), before relaxation.
    pub fn incoming(&self, s: usize) -> [T; Q] {
        let ctx = StepCtx {
            src: &self.src,
            rules: &self.rules,
            post: self.state.populations(),
            macros: self.state.macros(),
            rheology: self.rheology,
            force: self.force,
            has_force: self.has_force,
        };
        ctx.gather(s)
    }

    /// Overwrites the post-collision populations of site `s` and refreshes its
    /// density and velocity.
    pub fn set_populations(&mut self, s: usize, f: &[T; Q]) {
        let cur = self.state.cur;
        self.state.post[cur][s * Q..s * Q + Q].copy_from_slice(f);
        let (rho, u) = super::kernel::moments(f);
        let m = &mut self.state.macros[cur][s];
        m.rho = rho;
        m.u = u;
    }

    /// Sets every site to the equilibrium of the given density and velocity.
    pub fn initialize(&mut self, field: impl Fn(usize) -> (T, Vec3<T>)) {
        let cur = self.state.cur;
        let tau0 = self.rheology.tau_at_rest();
        for s in 0..self.fluid.len() {
            let (rho, u) = field(self.fluid[s]);
            let feq = equilibrium(rho, u);
            self.state.post[cur][s * Q..s * Q + Q].copy_from_slice(&feq);
            self.state.macros[cur][s] =
                SiteMacro { rho, u, strain: Sym3::zero(), shear_rate: T::zero(), tau: tau0 };
        }
    }

    /// Total mass sum_s sum_i f_i.
    pub fn total_mass(&self) -> f64 {
        self.state.populations().iter().map(|v| v.as_f64()).sum()
    }

    fn run_parallel<F>(&mut self, body: F)
    where
        F: Fn(&[T], &[SiteMacro<T>], usize, &mut [T], &mut [SiteMacro<T>]) + Sync,
    {
        let cur = self.state.cur;
        let (pa, pb) = self.state.post.split_at_mut(1);
        let (ma, mb) = self.state.macros.split_at_mut(1);
        let (old_p, new_p, old_m, new_m) =
            if cur == 0 { (&pa[0], &mut pb[0], &ma[0], &mut mb[0]) } else { (&pb[0], &mut pa[0], &mb[0], &mut ma[0]) };
        let old_p: &[T] = old_p;
        let old_m: &[SiteMacro<T>] = old_m;
        let work = |new_p: &mut Vec<T>, new_m: &mut Vec<SiteMacro<T>>| {
            new_p
                .par_chunks_mut(CHUNK * Q)
                .zip(new_m.par_chunks_mut(CHUNK))
                .enumerate()
                .for_each(|(c, (p, m))| body(old_p, old_m, c * CHUNK, p, m));
        };
        match &self.pool {
            Some(pool) if pool.current_num_threads() > 1 => pool.install(|| work(new_p, new_m)),
            Some(_) => {
                for (c, (p, m)) in new_p.chunks_mut(CHUNK * Q).zip(new_m.chunks_mut(CHUNK)).enumerate() {
                    body(old_p, old_m, c * CHUNK, p, m);
                }
            }
            None => work(new_p, new_m),
        }
        self.state.cur = 1 - cur;
    }

    /// One fused stream-and-collide step.
    pub fn step(&mut self) {
        let (src, rules, rheology, force, has_force) =
            (std::mem::take(&mut self.src), std::mem::take(&mut self.rules), self.rheology, self.force, self.has_force);
        self.run_parallel(|post, macros, start, out_p, out_m| {
            let ctx = StepCtx { src: &src, rules: &rules, post, macros, rheology, force, has_force };
            for (k, m) in out_m.iter_mut().enumerate() {
                let s = start + k;
                let f = ctx.gather(s);
                let (fp, mac) = ctx.relax(&f, macros[s].tau);
                out_p[k * Q..k * Q + Q].copy_from_slice(&fp);
                *m = mac;
            }
        });
        self.src = src;
        self.rules = rules;
        self.state.step += 1;
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Streaming only: each site receives its incoming populations (boundary
    /// rules included) without relaxing them. Density and velocity are
    /// refreshed; strain and relaxation time are kept.
    pub fn stream(&mut self) {
        let (src, rules, rheology) = (std::mem::take(&mut self.src), std::mem::take(&mut self.rules), self.rheology);
        self.run_parallel(|post, macros, start, out_p, out_m| {
            let ctx = StepCtx { src: &src, rules: &rules, post, macros, rheology, force: [T::zero(); 3], has_force: false };
            for (k, m) in out_m.iter_mut().enumerate() {
                let s = start + k;
                let f = ctx.gather(s);
                out_p[k * Q..k * Q + Q].copy_from_slice(&f);
                let (rho, u) = super::kernel::moments(&f);
                *m = SiteMacro { rho, u, ..macros[s] };
            }
        });
        self.src = src;
        self.rules = rules;
    }

    /// Collision only, applied to the current populations.
    pub fn collide(&mut self) {
        let (rheology, force, has_force) = (self.rheology, self.force, self.has_force);
        self.run_parallel(|post, macros, start, out_p, out_m| {
            for (k, m) in out_m.iter_mut().enumerate() {
                let s = start + k;
                let mut f = [T::zero(); Q];
                f.copy_from_slice(&post[s * Q..s * Q + Q]);
                let (fp, mac) = relax_site(&f, macros[s].tau, &rheology, force, has_force);
                out_p[k * Q..k * Q + Q].copy_from_slice(&fp);
                *m = mac;
            }
        });
    }

    /// Scans for negative or non-finite densities, non-finite velocities or
    /// populations, and invalid relaxation times.
    pub fn check_stability(&self) -> Result<()> {
        let half = T::of(0.5);
        let bad = self.state.macros().par_iter().position_first(|m| {
            !(m.rho > T::zero()) || !m.rho.is_finite() || !m.u.iter().all(|v| v.is_finite()) || !(m.tau > half)
        });
        if let Some(s) = bad {
            let m = &self.state.macros()[s];
            return Err(Error::Instability {
                step: self.state.step,
                detail: format!("site {} has density {}, velocity {:?}, tau {}", self.fluid[s], m.rho, m.u, m.tau),
                last_stable: None,
            });
        }
        if let Some(k) = self.state.populations().par_iter().position_first(|f| !f.is_finite()) {
            return Err(Error::Instability {
                step: self.state.step,
                detail: format!("non-finite population at site {}", self.fluid[k / Q]),
                last_stable: None,
            });
        }
        Ok(())
    }

    /// Number of negative populations (a warning sign, not an error).
    pub fn negative_populations(&self) -> usize {
        self.state.populations().par_iter().filter(|f| **f < T::zero()).count()
    }

    /// Density and velocity of every site as `f64`.
    pub fn stable_fields(&self) -> StableFields {
        let m = self.state.macros();
        StableFields {
            step: self.state.step,
            density: m.iter().map(|m| m.rho.as_f64()).collect(),
            velocity: m.iter().map(|m| [m.u[0].as_f64(), m.u[1].as_f64(), m.u[2].as_f64()]).collect(),
        }
    }

    /// Largest site-wise velocity change against `previous` (lattice units).
    pub fn max_velocity_change(&self, previous: &[Vec3<T>]) -> f64 {
        self.state
            .macros()
            .par_iter()
            .zip(previous.par_iter())
            .map(|(m, p)| {
                let d = [m.u[0] - p[0], m.u[1] - p[1], m.u[2] - p[2]];
                (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().as_f64()
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn velocities(&self) -> Vec<Vec3<T>> {
        self.state.macros().iter().map(|m| m.u).collect()
    }
}
