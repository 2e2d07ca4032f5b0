//! Time loop, steady-state detection and derived flow quantities.

use crate::boundaries::IoletCondition;
use crate::error::{Error, Result};
use crate::geometry::{IoletKind, SiteClass, VoxelDomain};
use crate::lbm::{Solver, SolverOptions, OPPOSITE, Q};
use crate::rheology::Rheology;
use crate::scalar::Real;
use crate::tensor::{dot, Vec3};
use crate::units::UnitBridge;
use log::{debug, info};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Default reference speed of the convergence criterion (m/s).
pub const DEFAULT_V_REF: f64 = 0.05;
pub const DEFAULT_EPS_TOL: f64 = 1e-6;
pub const DEFAULT_CHECK_INTERVAL: u64 = 100;
pub const DEFAULT_MAX_STEPS: u64 = 5_000_000;
pub const DEFAULT_LOG_INTERVAL: u64 = 10_000;

/// Steady state is declared when the largest site-wise velocity change
/// between two checks, divided by `v_ref`, drops below `eps_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceMonitor {
    /// Reference speed in lattice units.
    pub v_ref: f64,
    pub eps_tol: f64,
    pub check_interval: u64,
    pub max_steps: u64,
    pub log_interval: u64,
}

impl ConvergenceMonitor {
    pub fn lattice(v_ref: f64) -> Self {
        ConvergenceMonitor {
            v_ref,
            eps_tol: DEFAULT_EPS_TOL,
            check_interval: DEFAULT_CHECK_INTERVAL,
            max_steps: DEFAULT_MAX_STEPS,
            log_interval: DEFAULT_LOG_INTERVAL,
        }
    }

    /// Monitor with a physical reference speed (m/s).
    pub fn physical(v_ref: f64, bridge: &UnitBridge<f64>) -> Self {
        Self::lattice(bridge.velocity_to_lattice(v_ref))
    }

    pub fn with_tolerance(mut self, eps_tol: f64) -> Self {
        self.eps_tol = eps_tol;
        self
    }

    pub fn with_check_interval(mut self, n: u64) -> Self {
        self.check_interval = n.max(1);
        self
    }

    pub fn with_max_steps(mut self, n: u64) -> Self {
        self.max_steps = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_ref > 0.0 && self.eps_tol > 0.0) || self.check_interval == 0 {
            return Err(Error::Config(format!(
                "convergence monitor needs v_ref > 0, eps_tol > 0 and a positive check interval (got {}, {}, {})",
                self.v_ref, self.eps_tol, self.check_interval
            )));
        }
        Ok(())
    }

    pub fn residual(&self, max_change: f64) -> f64 {
        max_change / self.v_ref
    }

    pub fn converged(&self, max_change: f64) -> bool {
        self.residual(max_change) < self.eps_tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub steps: u64,
    pub residual: f64,
    pub seconds: f64,
    /// (step, residual) at every check.
    pub history: Vec<(u64, f64)>,
}

/// Advances `solver` until the convergence criterion holds at a check.
pub fn run_to_steady<T: Real>(solver: &mut Solver<T>, monitor: &ConvergenceMonitor) -> Result<RunOutcome> {
    monitor.validate()?;
    let start = Instant::now();
    let mut history = Vec::new();
    let mut previous = solver.velocities();
    let mut last_stable = solver.stable_fields();
    let mut next_log = solver.step_count() + monitor.log_interval;
    loop {
        let remaining = monitor.max_steps.saturating_sub(solver.step_count());
        if remaining == 0 {
            let last_residual = history.last().map(|h: &(u64, f64)| h.1).unwrap_or(f64::INFINITY);
            return Err(Error::Timeout { steps: solver.step_count(), last_residual, history });
        }
        solver.run(monitor.check_interval.min(remaining));
        if let Err(e) = solver.check_stability() {
            return Err(match e {
                Error::Instability { step, detail, .. } => {
                    Error::Instability { step, detail, last_stable: Some(Box::new(last_stable)) }
                }
                other => other,
            });
        }
        let change = solver.max_velocity_change(&previous);
        let residual = monitor.residual(change);
        let step = solver.step_count();
        history.push((step, residual));
        debug!("step {step}: residual {residual:e}");
        if step >= next_log {
            info!("step {step}: residual {residual:e}");
            next_log += monitor.log_interval;
        }
        if monitor.converged(change) {
            return Ok(RunOutcome { steps: step, residual, seconds: start.elapsed().as_secs_f64(), history });
        }
        previous = solver.velocities();
        last_stable = solver.stable_fields();
    }
}

/// Builds a solver at rest and runs it to steady state.
pub fn run_steady<T: Real>(
    domain: &VoxelDomain,
    rheology: Rheology<T>,
    conditions: &[IoletCondition],
    monitor: &ConvergenceMonitor,
    opts: SolverOptions,
) -> Result<(Solver<T>, RunOutcome)> {
    let mut solver = Solver::new(domain, conditions, rheology, opts)?;
    let outcome = run_to_steady(&mut solver, monitor)?;
    Ok((solver, outcome))
}

/// Which quantity a plane integral sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flux {
    /// sum of u . n
    Volumetric,
    /// sum of rho u . n (reference density 1)
    Mass,
}

/// Integral of the velocity over the fluid sites of a lattice-aligned plane,
/// in lattice units (site area 1). `include` receives each site's position
/// (micrometres) and can restrict the sum further.
pub fn flow_rate<T: Real>(
    solver: &Solver<T>,
    domain: &VoxelDomain,
    point: [f64; 3],
    axis: usize,
    flux: Flux,
    include: impl Fn([f64; 3]) -> bool,
) -> Result<f64> {
    if axis > 2 {
        return Err(Error::domain(format!("plane axis {axis} is not 0, 1 or 2")));
    }
    let layer = (point[axis] - domain.origin[axis]) / domain.dx;
    let k = layer.round();
    if (layer - k).abs() > 1e-6 || k < 0.0 || k >= domain.dims[axis] as f64 {
        return Err(Error::domain(format!(
            "plane through {:?} along axis {axis} is not a lattice layer inside the domain",
            point
        )));
    }
    let k = k as usize;
    let mut sum = 0.0;
    for s in 0..solver.site_count() {
        let g = solver.grid_index(s);
        if domain.coords(g)[axis] != k || !include(domain.position(g)) {
            continue;
        }
        let m = solver.site(s);
        let u = m.u[axis].as_f64();
        sum += match flux {
            Flux::Volumetric => u,
            Flux::Mass => m.rho.as_f64() * u,
        };
    }
    Ok(sum)
}

/// Net mass leaving through each iolet per step (lattice units; negative
/// for inflow), from the populations crossing its links.
pub fn iolet_fluxes<T: Real>(solver: &Solver<T>, domain: &VoxelDomain) -> Vec<f64> {
    let mut out = vec![0.0; domain.iolets.len()];
    let mut incoming_cache: Option<(usize, [T; Q])> = None;
    for l in &domain.iolet_links {
        let Some(s) = solver.site_of_grid(l.site) else { continue };
        let inc = match incoming_cache {
            Some((cs, f)) if cs == s => f,
            _ => {
                let f = solver.incoming(s);
                incoming_cache = Some((s, f));
                f
            }
        };
        let i = l.dir as usize;
        let leaving = solver.populations(s)[i].as_f64();
        let entering = inc[OPPOSITE[i]].as_f64();
        out[l.iolet as usize] += leaving - entering;
    }
    out
}

fn iolet_margin(domain: &VoxelDomain) -> Vec<bool> {
    domain.class.iter().map(|c| matches!(c, SiteClass::Iolet(_))).collect()
}

/// Largest speed over the fluid sites (lattice units), skipping sites that
/// carry iolet links.
pub fn peak_speed<T: Real>(solver: &Solver<T>, domain: &VoxelDomain) -> f64 {
    let skip = iolet_margin(domain);
    let mut peak: f64 = 0.0;
    for s in 0..solver.site_count() {
        if skip[solver.grid_index(s)] {
            continue;
        }
        let u = solver.site(s).u;
        let v = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt().as_f64();
        peak = peak.max(v);
    }
    peak
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoletReport {
    pub index: usize,
    pub kind: IoletKind,
    pub pressure_mmhg: f64,
    pub density: f64,
    /// Net outflow per step (lattice units, negative for inflow).
    pub flow_rate_lattice: f64,
    pub flow_rate_m3_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub fluid_sites: usize,
    pub steps: u64,
    pub residual: f64,
    pub wall_clock_s: f64,
    pub peak_velocity_lattice: f64,
    pub peak_velocity_m_per_s: f64,
    pub iolets: Vec<IoletReport>,
    /// Files written alongside the report.
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl RunReport {
    pub fn new<T: Real>(solver: &Solver<T>, domain: &VoxelDomain, bridge: &UnitBridge<f64>, outcome: &RunOutcome) -> Self {
        let peak = peak_speed(solver, domain);
        let fluxes = iolet_fluxes(solver, domain);
        let iolets = domain
            .iolets
            .iter()
            .zip(fluxes)
            .enumerate()
            .map(|(k, (io, q))| IoletReport {
                index: k,
                kind: io.kind,
                pressure_mmhg: io.pressure_mmhg,
                density: io.density,
                flow_rate_lattice: q,
                flow_rate_m3_per_s: bridge.flow_rate_to_physical(q),
            })
            .collect();
        RunReport {
            fluid_sites: solver.site_count(),
            steps: outcome.steps,
            residual: outcome.residual,
            wall_clock_s: outcome.seconds,
            peak_velocity_lattice: peak,
            peak_velocity_m_per_s: bridge.velocity_to_physical(peak),
            iolets,
            outputs: Vec::new(),
        }
    }

    /// Relative imbalance between total inflow and total outflow.
    pub fn flux_imbalance(&self) -> f64 {
        let (mut inflow, mut outflow) = (0.0, 0.0);
        for io in &self.iolets {
            if io.flow_rate_lattice < 0.0 {
                inflow -= io.flow_rate_lattice;
            } else {
                outflow += io.flow_rate_lattice;
            }
        }
        let scale = inflow.max(outflow);
        if scale == 0.0 {
            0.0
        } else {
            (inflow - outflow).abs() / scale
        }
    }
}

/// Wall traction at one wall link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TractionRecord {
    /// Wall intersection point (micrometres).
    pub position: [f64; 3],
    /// Unit wall normal, pointing out of the fluid.
    pub normal: [f64; 3],
    /// T n (Pa).
    pub traction: [f64; 3],
    /// |T n| (Pa).
    pub wss: f64,
}

/// Traction t = T n at every wall link, with T the deviatoric stress of the
/// fluid site owning the link.
pub fn traction_field<T: Real>(solver: &Solver<T>, domain: &VoxelDomain, bridge: &UnitBridge<f64>) -> Vec<TractionRecord> {
    let scale = bridge.stress_scale();
    domain
        .wall_links
        .iter()
        .filter_map(|l| {
            let s = solver.site_of_grid(l.site)?;
            let m = solver.site(s);
            let eta = Rheology::<T>::lattice_eta(m.tau);
            let t = m.strain.scaled(T::of(2.0) * eta);
            let n: Vec3<T> = [T::of(l.normal[0]), T::of(l.normal[1]), T::of(l.normal[2])];
            let tn = t.mul_vec(n);
            let traction = [tn[0].as_f64() * scale, tn[1].as_f64() * scale, tn[2].as_f64() * scale];
            let x = domain.position(l.site);
            let c = crate::lbm::C[l.dir as usize];
            let h = l.q * domain.dx;
            Some(TractionRecord {
                position: [x[0] + h * c[0] as f64, x[1] + h * c[1] as f64, x[2] + h * c[2] as f64],
                normal: l.normal,
                traction,
                wss: dot(traction, traction).sqrt(),
            })
        })
        .collect()
}

/// Least-squares line y = slope x + intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("linear fit needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("linear fit needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit { slope, intercept, r_squared })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OppRow {
    pub opp_mmhg: f64,
    pub peak_velocity_m_per_s: f64,
    pub steps: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OppSweep {
    pub rows: Vec<OppRow>,
    /// Peak velocity (m/s) against OPP (mmHg).
    pub fit: LinearFit,
}

/// One steady run per perfusion pressure. Inlets sit at `outlet_mmhg + opp`,
/// outlets at `outlet_mmhg`, which maps to lattice density 1.
pub fn opp_sweep<T: Real>(
    domain: &VoxelDomain,
    rheology: Rheology<T>,
    bridge: &UnitBridge<f64>,
    opp_list: &[f64],
    outlet_mmhg: f64,
    monitor: &ConvergenceMonitor,
    opts: SolverOptions,
) -> Result<OppSweep> {
    if opp_list.len() < 3 {
        return Err(Error::Config(format!("an OPP sweep needs at least 3 pressures, got {}", opp_list.len())));
    }
    let mut rows = Vec::with_capacity(opp_list.len());
    for &opp in opp_list {
        let mut dom = domain.clone();
        for io in &mut dom.iolets {
            io.pressure_mmhg = match io.kind {
                IoletKind::Inlet => outlet_mmhg + opp,
                IoletKind::Outlet => outlet_mmhg,
            };
        }
        dom.assign_densities(bridge, outlet_mmhg);
        let conditions = IoletCondition::from_domain(&dom);
        let (solver, outcome) = run_steady(&dom, rheology, &conditions, monitor, opts)?;
        let peak = bridge.velocity_to_physical(peak_speed(&solver, &dom));
        info!("OPP {opp} mmHg: peak {peak:.6e} m/s after {} steps", outcome.steps);
        rows.push(OppRow { opp_mmhg: opp, peak_velocity_m_per_s: peak, steps: outcome.steps, seconds: outcome.seconds });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.opp_mmhg).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.peak_velocity_m_per_s).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(OppSweep { rows, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_exact() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-14);
        assert!((f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn monitor_threshold() {
        let m = ConvergenceMonitor::lattice(0.01);
        assert!(m.converged(0.9e-8));
        assert!(!m.converged(1.1e-8));
        assert!(ConvergenceMonitor::lattice(0.0).validate().is_err());
        let bridge = UnitBridge::new(1e-6, 1e-7, 1000.0).unwrap();
        let p = ConvergenceMonitor::physical(DEFAULT_V_REF, &bridge);
        assert!((p.v_ref - 0.005).abs() < 1e-15);
    }
}
