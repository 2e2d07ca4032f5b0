//! Inclined-cylinder benchmarks against the Hagen-Poiseuille solution, error
//! metrics and grid refinement.

use crate::assets::cylinder_skeleton;
use crate::boundaries::IoletCondition;
use crate::error::{Error, Result};
use crate::geometry::{voxelize, VoxelDomain, VoxelizeOptions};
use crate::lbm::{Solver, SolverOptions};
use crate::rheology::{CarreauYasudaParams, Rheology};
use crate::units::{UnitBridge, DEFAULT_BLOOD_DENSITY};
use crate::simulation::{flow_rate, run_to_steady, ConvergenceMonitor, Flux, RunOutcome};
use crate::tensor::{cross, dot, normalize, sub, Sym3};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Cylinder axis of the benchmark (three decimals, normalised on use).
pub const INCLINED_AXIS: [f64; 3] = [-0.299, 0.382, 0.874];
pub const SUITE_DIAMETERS: [f64; 7] = [3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0];
pub const SUITE_TAUS: [f64; 5] = [0.6, 0.8, 1.0, 1.2, 1.4];
/// Radial bins (fractions of R) of the near-wall stress error.
pub const WALL_BINS: [(f64, f64); 2] = [(0.8, 0.9), (0.9, 1.0)];
/// Bin edges reported by the suite, from 0.5 R to R.
pub const REPORT_BINS: [(f64, f64); 5] = [(0.5, 0.6), (0.6, 0.7), (0.7, 0.8), (0.8, 0.9), (0.9, 1.0)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclinedCylinderSpec {
    /// Diameter in lattice spacings.
    pub diameter: f64,
    pub tau: f64,
    /// Unit axis; the inlet sits at the `+axis` end.
    pub axis: [f64; 3],
    pub reynolds: f64,
    /// Lattice spacing (micrometres); only changes the physical size.
    pub dx: f64,
}

impl InclinedCylinderSpec {
    pub fn new(diameter: f64, tau: f64) -> Result<Self> {
        Self::with_axis(diameter, tau, INCLINED_AXIS)
    }

    pub fn with_axis(diameter: f64, tau: f64, axis: [f64; 3]) -> Result<Self> {
        let len = dot(axis, axis).sqrt();
        if (len - 1.0).abs() > 1e-3 {
            return Err(Error::domain(format!("cylinder axis has length {len}, expected 1")));
        }
        let axis = normalize(axis).expect("checked length");
        if axis.iter().any(|c| c.abs() > 0.9) {
            return Err(Error::domain(format!("cylinder axis {axis:?} is too close to a lattice axis")));
        }
        if !(3.0..=30.0).contains(&diameter) {
            return Err(Error::domain(format!("cylinder diameter {diameter} outside [3, 30] lattice spacings")));
        }
        if !(tau > 0.5) {
            return Err(Error::domain(format!("relaxation time must exceed 1/2, got {tau}")));
        }
        Ok(InclinedCylinderSpec { diameter, tau, axis, reynolds: 1.0, dx: 1.0 })
    }

    pub fn with_dx(mut self, dx: f64) -> Self {
        self.dx = dx;
        self
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    pub fn length(&self) -> f64 {
        4.0 * self.diameter
    }

    pub fn lattice_viscosity(&self) -> f64 {
        (self.tau - 0.5) / 3.0
    }

    /// |v_max| = nu Re / D.
    pub fn peak_speed(&self) -> f64 {
        self.lattice_viscosity() * self.reynolds / self.diameter
    }

    /// Centre-line velocity; flow runs from the `+axis` end to the `-axis` end.
    pub fn peak_velocity(&self) -> [f64; 3] {
        let v = self.peak_speed();
        [-v * self.axis[0], -v * self.axis[1], -v * self.axis[2]]
    }

    pub fn analytic(&self) -> Result<AnalyticPoiseuille> {
        AnalyticPoiseuille::new(self.axis, self.radius(), -self.peak_speed(), self.lattice_viscosity())
    }

    /// Voxelized cylinder centred on the origin.
    pub fn domain(&self) -> Result<VoxelDomain> {
        let sk = cylinder_skeleton([0.0; 3], self.axis, self.diameter * self.dx, self.length() * self.dx);
        voxelize(&sk, self.dx, VoxelizeOptions::default())
    }
}

/// Hagen-Poiseuille flow in a cylinder through the origin, in lattice units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPoiseuille {
    pub radius: f64,
    /// Signed centre-line speed along the axis.
    pub axial_speed: f64,
    pub eta: f64,
    /// Columns map the canonical frame (axis along e3) to the cylinder frame.
    pub rotation: [[f64; 3]; 3],
}

impl AnalyticPoiseuille {
    pub fn new(axis: [f64; 3], radius: f64, axial_speed: f64, eta: f64) -> Result<Self> {
        let n = normalize(axis).ok_or_else(|| Error::domain("zero cylinder axis"))?;
        let r2 = normalize(cross(n, [0.0, 0.0, 1.0]))
            .filter(|_| dot(cross(n, [0.0, 0.0, 1.0]), cross(n, [0.0, 0.0, 1.0])) > 1e-24)
            .ok_or_else(|| Error::domain("cylinder axis parallel to e3 leaves the rotation undefined"))?;
        let r3 = cross(n, r2);
        let rotation = [[r2[0], r3[0], n[0]], [r2[1], r3[1], n[1]], [r2[2], r3[2], n[2]]];
        Ok(AnalyticPoiseuille { radius, axial_speed, eta, rotation })
    }

    pub fn axis(&self) -> [f64; 3] {
        [self.rotation[0][2], self.rotation[1][2], self.rotation[2][2]]
    }

    /// Point expressed in the canonical frame.
    pub fn to_canonical(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        [
            r[0][0] * p[0] + r[1][0] * p[1] + r[2][0] * p[2],
            r[0][1] * p[0] + r[1][1] * p[1] + r[2][1] * p[2],
            r[0][2] * p[0] + r[1][2] * p[1] + r[2][2] * p[2],
        ]
    }

    /// Distance from the axis.
    pub fn radial(&self, p: [f64; 3]) -> f64 {
        let c = self.to_canonical(p);
        (c[0] * c[0] + c[1] * c[1]).sqrt()
    }

    pub fn velocity(&self, p: [f64; 3]) -> [f64; 3] {
        let r = self.radial(p) / self.radius;
        let s = self.axial_speed * (1.0 - r * r).max(0.0);
        let n = self.axis();
        [s * n[0], s * n[1], s * n[2]]
    }

    /// Stress in the canonical frame at a canonical point.
    pub fn canonical_stress(&self, c: [f64; 3]) -> Sym3<f64> {
        let k = -2.0 * self.axial_speed * self.eta / (self.radius * self.radius);
        Sym3([0.0, 0.0, 0.0, 0.0, k * c[0], k * c[1]])
    }

    pub fn stress(&self, p: [f64; 3]) -> Result<Sym3<f64>> {
        let c = self.to_canonical(p);
        if (c[0] * c[0] + c[1] * c[1]).sqrt() > self.radius * (1.0 + 1e-9) {
            return Err(Error::domain(format!("point {p:?} lies outside the cylinder")));
        }
        Ok(self.canonical_stress(c).rotated(&self.rotation))
    }
}

/// q* = |v_max| pi D^2 / 8.
pub fn analytic_flow_rate(peak_speed: f64, diameter: f64) -> f64 {
    peak_speed.abs() * std::f64::consts::PI * diameter * diameter / 8.0
}

pub fn flow_rate_error(q: f64, q_star: f64) -> Result<f64> {
    if q_star == 0.0 {
        return Err(Error::domain("reference flow rate is zero"));
    }
    Ok(((q_star - q) / q_star).abs())
}

/// Relative Frobenius error |T* - T|_F / |T*|_F.
pub fn stress_error(t: &Sym3<f64>, t_star: &Sym3<f64>) -> Result<f64> {
    let n = t_star.frobenius();
    if n == 0.0 {
        return Err(Error::domain("reference stress is zero"));
    }
    Ok(t_star.minus(t).frobenius() / n)
}

/// Stress error statistics over one radial bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub sites: usize,
    pub mean_error: f64,
    pub max_error: f64,
    pub mean_norm: f64,
    pub mean_norm_analytic: f64,
}

impl StressBin {
    pub fn underestimates(&self) -> bool {
        self.mean_norm < self.mean_norm_analytic
    }
}

/// Per-bin stress errors of a converged cylinder run. Only sites in the
/// middle half of the cylinder (|axial| <= L/4) take part.
pub fn stress_bins(
    solver: &Solver<f64>,
    domain: &VoxelDomain,
    spec: &InclinedCylinderSpec,
    bins: &[(f64, f64)],
) -> Result<Vec<StressBin>> {
    let ana = spec.analytic()?;
    let mut acc = vec![(0usize, 0.0f64, 0.0f64, 0.0f64, 0.0f64); bins.len()];
    for s in 0..solver.site_count() {
        let p = lattice_position(domain, solver.grid_index(s));
        let c = ana.to_canonical(p);
        if c[2].abs() > 0.25 * spec.length() {
            continue;
        }
        let rr = (c[0] * c[0] + c[1] * c[1]).sqrt() / ana.radius;
        let Some(b) = bins.iter().position(|&(lo, hi)| rr >= lo && (rr < hi || (hi >= 1.0 && rr <= hi))) else {
            continue;
        };
        let m = solver.site(s);
        let t = m.strain.scaled(2.0 * Rheology::<f64>::lattice_eta(m.tau));
        let t_star = ana.canonical_stress(c).rotated(&ana.rotation);
        let e = stress_error(&t, &t_star)?;
        let a = &mut acc[b];
        a.0 += 1;
        a.1 += e;
        a.2 = a.2.max(e);
        a.3 += t.frobenius();
        a.4 += t_star.frobenius();
    }
    Ok(bins
        .iter()
        .zip(acc)
        .map(|(&(lo, hi), (n, sum, max, tn, tsn))| {
            let k = n.max(1) as f64;
            StressBin {
                r_lo: lo,
                r_hi: hi,
                sites: n,
                mean_error: if n == 0 { f64::NAN } else { sum / k },
                max_error: if n == 0 { f64::NAN } else { max },
                mean_norm: tn / k,
                mean_norm_analytic: tsn / k,
            }
        })
        .collect())
}

/// Site position in lattice units.
pub fn lattice_position(domain: &VoxelDomain, grid: usize) -> [f64; 3] {
    let p = domain.position(grid);
    [p[0] / domain.dx, p[1] / domain.dx, p[2] / domain.dx]
}

/// Flow rate through the z = 0 plane, restricted to sites inside the
/// analytic cross-section.
pub fn cylinder_flow_rate(solver: &Solver<f64>, domain: &VoxelDomain, spec: &InclinedCylinderSpec, flux: Flux) -> Result<f64> {
    let ana = spec.analytic()?;
    let dx = domain.dx;
    let q = flow_rate(solver, domain, [0.0; 3], 2, flux, |p| ana.radial([p[0] / dx, p[1] / dx, p[2] / dx]) <= ana.radius)?;
    Ok(q.abs())
}

/// A converged inclined-cylinder run.
pub struct CylinderRun {
    pub spec: InclinedCylinderSpec,
    pub domain: VoxelDomain,
    pub solver: Solver<f64>,
    pub outcome: RunOutcome,
}

impl CylinderRun {
    pub fn flow_rate_error(&self) -> Result<f64> {
        let q = cylinder_flow_rate(&self.solver, &self.domain, &self.spec, BENCH_FLUX)?;
        flow_rate_error(q, analytic_flow_rate(self.spec.peak_speed(), self.spec.diameter))
    }

    pub fn stress_bins(&self, bins: &[(f64, f64)]) -> Result<Vec<StressBin>> {
        stress_bins(&self.solver, &self.domain, &self.spec, bins)
    }
}

/// Flux used for the flow-rate error.
pub const BENCH_FLUX: Flux = Flux::Mass;

/// Convergence monitor of the benchmarks: reference speed |v_max|.
pub fn bench_monitor(spec: &InclinedCylinderSpec) -> ConvergenceMonitor {
    ConvergenceMonitor::lattice(spec.peak_speed())
}

/// Runs the cylinder with a parabolic velocity inlet and a pressure outlet at
/// density 1. `rheology` defaults to a Newtonian fluid at `spec.tau`.
pub fn run_inclined_cylinder(
    spec: &InclinedCylinderSpec,
    rheology: Option<Rheology<f64>>,
    monitor: Option<ConvergenceMonitor>,
    opts: SolverOptions,
) -> Result<CylinderRun> {
    let domain = spec.domain()?;
    let rheology = match rheology {
        Some(r) => r,
        None => Rheology::newtonian(spec.tau)?,
    };
    let conditions = IoletCondition::velocity_inlets(&domain, spec.peak_speed());
    let mut solver = Solver::new(&domain, &conditions, rheology, opts)?;
    let monitor = monitor.unwrap_or_else(|| bench_monitor(spec));
    let outcome = run_to_steady(&mut solver, &monitor)?;
    Ok(CylinderRun { spec: *spec, domain, solver, outcome })
}

/// Relaxation-time window (high shear, zero shear) of the shear-thinning benchmark.
pub const CY_TAU_WINDOW: (f64, f64) = (0.6, 0.992);

/// Murine Carreau-Yasuda blood on a 1 um lattice whose high-shear plateau
/// relaxes with `CY_TAU_WINDOW.0`, with both plateaus pinned to the window.
pub fn cy_window_rheology(dx_um: f64) -> Result<(UnitBridge<f64>, Rheology<f64>)> {
    let p = CarreauYasudaParams::MURINE_BLOOD;
    let (tau_inf, tau_0) = CY_TAU_WINDOW;
    let bridge = UnitBridge::for_relaxation_time(p.eta_inf, tau_inf, dx_um * 1e-6, DEFAULT_BLOOD_DENSITY)?;
    let rheology = Rheology::carreau_yasuda_window(&p, &bridge, tau_inf, tau_0)?;
    Ok((bridge, rheology))
}

/// Inclined cylinder with the shear-thinning window; Re is based on the
/// high-shear viscosity.
pub fn run_cy_cylinder(diameter: f64, opts: SolverOptions) -> Result<CylinderRun> {
    let spec = InclinedCylinderSpec::new(diameter, CY_TAU_WINDOW.0)?;
    let (_, rheology) = cy_window_rheology(spec.dx)?;
    run_inclined_cylinder(&spec, Some(rheology), None, opts)
}

/// One row of the benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub diameter: f64,
    pub tau: f64,
    pub eps_q: f64,
    pub eps_t_wall: f64,
    pub eps_t_bins: Vec<f64>,
    pub steps: u64,
    pub seconds: f64,
    /// Failure message when the run did not complete.
    pub error: Option<String>,
}

pub fn benchmark_row(spec: &InclinedCylinderSpec, opts: SolverOptions) -> BenchmarkRow {
    let result = run_inclined_cylinder(spec, None, None, opts).and_then(|run| {
        let eps_q = run.flow_rate_error()?;
        let bins = run.stress_bins(&REPORT_BINS)?;
        let wall = run.stress_bins(&WALL_BINS)?;
        let eps_t_wall = wall.iter().map(|b| b.mean_error).fold(f64::NAN, f64::max);
        Ok(BenchmarkRow {
            diameter: spec.diameter,
            tau: spec.tau,
            eps_q,
            eps_t_wall,
            eps_t_bins: bins.iter().map(|b| b.mean_error).collect(),
            steps: run.outcome.steps,
            seconds: run.outcome.seconds,
            error: None,
        })
    });
    result.unwrap_or_else(|e| BenchmarkRow {
        diameter: spec.diameter,
        tau: spec.tau,
        eps_q: f64::NAN,
        eps_t_wall: f64::NAN,
        eps_t_bins: vec![f64::NAN; REPORT_BINS.len()],
        steps: 0,
        seconds: 0.0,
        error: Some(e.to_string()),
    })
}

/// Runs every (D, tau) pair; failed runs are recorded and the suite goes on.
pub fn run_benchmark_suite(diameters: &[f64], taus: &[f64], opts: SolverOptions) -> Result<Vec<BenchmarkRow>> {
    let mut rows = Vec::new();
    for &d in diameters {
        for &t in taus {
            let spec = InclinedCylinderSpec::new(d, t)?;
            let row = benchmark_row(&spec, opts);
            log::info!("D {d} tau {t}: eps_q {:.4e} eps_T {:.4e} ({} steps)", row.eps_q, row.eps_t_wall, row.steps);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Writes the table as CSV, or whitespace-separated with a `#` header.
pub fn write_benchmark_table<W: Write>(rows: &[BenchmarkRow], mut w: W, whitespace: bool) -> Result<()> {
    let sep = if whitespace { " " } else { "," };
    let mut header = vec!["D".to_string(), "tau".into(), "eps_q".into(), "eps_T_wall".into()];
    for (lo, hi) in REPORT_BINS {
        header.push(format!("eps_T_{lo:.1}_{hi:.1}"));
    }
    header.extend(["steps".to_string(), "seconds".into()]);
    if whitespace {
        writeln!(w, "# {}", header.join(sep))?;
    } else {
        writeln!(w, "{}", header.join(sep))?;
    }
    for r in rows {
        let mut f = vec![format!("{}", r.diameter), format!("{}", r.tau), format!("{:.6e}", r.eps_q), format!("{:.6e}", r.eps_t_wall)];
        f.extend(r.eps_t_bins.iter().map(|e| format!("{e:.6e}")));
        f.push(r.steps.to_string());
        f.push(format!("{:.3}", r.seconds));
        writeln!(w, "{}", f.join(sep))?;
    }
    Ok(())
}

/// Velocities of the sites in the z = 0 plane, scaled by |v_max|, keyed by
/// their lattice position (micrometres).
pub fn plane_velocities(run: &CylinderRun) -> Vec<([f64; 3], [f64; 3])> {
    let v = run.spec.peak_speed();
    let mut out = Vec::new();
    for s in 0..run.solver.site_count() {
        let g = run.solver.grid_index(s);
        let p = run.domain.position(g);
        if p[2].abs() > 1e-9 * run.domain.dx {
            continue;
        }
        let u = run.solver.site(s).u;
        out.push((p, [u[0] / v, u[1] / v, u[2] / v]));
    }
    out
}

/// eps^2 = sqrt(sum |v_c - v_r|^2) / (sqrt(N) max |v_r|), pairing each coarse
/// site with the nearest reference site.
pub fn grid_refinement_error(coarse: &[([f64; 3], [f64; 3])], reference: &[([f64; 3], [f64; 3])]) -> Result<f64> {
    if coarse.is_empty() || reference.is_empty() {
        return Err(Error::domain("grid refinement needs non-empty fields"));
    }
    let vmax = reference.iter().map(|(_, v)| dot(*v, *v).sqrt()).fold(0.0, f64::max);
    if vmax == 0.0 {
        return Err(Error::domain("reference field is at rest"));
    }
    let mut sum = 0.0;
    for (p, v) in coarse {
        let (_, vr) = reference
            .iter()
            .min_by(|a, b| {
                let da = sub(a.0, *p);
                let db = sub(b.0, *p);
                dot(da, da).total_cmp(&dot(db, db))
            })
            .expect("non-empty");
        let d = sub(*v, *vr);
        sum += dot(d, d);
    }
    Ok(sum.sqrt() / ((coarse.len() as f64).sqrt() * vmax))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    /// (dx, eps^2) per coarse level.
    pub levels: Vec<(f64, f64)>,
    /// Least-squares slope of ln eps^2 against ln dx.
    pub order: f64,
    pub reference_dx: f64,
}

/// Cylinder of fixed physical diameter `diameter_um` at every spacing of
/// `dxs` compared with a run at `reference_dx`.
pub fn grid_refinement(diameter_um: f64, tau: f64, dxs: &[f64], reference_dx: f64, opts: SolverOptions) -> Result<RefinementStudy> {
    let run_at = |dx: f64| -> Result<CylinderRun> {
        let spec = InclinedCylinderSpec::new(diameter_um / dx, tau)?.with_dx(dx);
        run_inclined_cylinder(&spec, None, None, opts)
    };
    let reference = plane_velocities(&run_at(reference_dx)?);
    let mut levels = Vec::new();
    for &dx in dxs {
        let coarse = plane_velocities(&run_at(dx)?);
        levels.push((dx, grid_refinement_error(&coarse, &reference)?));
    }
    let x: Vec<f64> = levels.iter().map(|l| l.0.ln()).collect();
    let y: Vec<f64> = levels.iter().map(|l| l.1.ln()).collect();
    let order = crate::simulation::linear_fit(&x, &y)?.slope;
    Ok(RefinementStudy { levels, order, reference_dx })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_rate_closed_form() {
        assert!((analytic_flow_rate(0.01, 10.0) - 0.01 * std::f64::consts::PI * 100.0 / 8.0).abs() < 1e-15);
        assert_eq!(analytic_flow_rate(0.0, 10.0), 0.0);
        assert!((analytic_flow_rate(0.01, 20.0) / analytic_flow_rate(0.01, 10.0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn error_metrics() {
        assert_eq!(flow_rate_error(1.0, 1.0).unwrap(), 0.0);
        assert!((flow_rate_error(0.97, 1.0).unwrap() - 0.03).abs() < 1e-15);
        assert!(flow_rate_error(1.0, 0.0).is_err());
        let t = Sym3([0.1, -0.2, 0.3, 0.4, -0.5, 0.6]);
        assert_eq!(stress_error(&t, &t).unwrap(), 0.0);
        let mut flipped = t;
        flipped.0[3] = -flipped.0[3];
        assert!(stress_error(&flipped, &t).unwrap() > 0.5);
    }

    #[test]
    fn axis_along_e3_is_degenerate() {
        assert!(AnalyticPoiseuille::new([0.0, 0.0, 1.0], 5.0, 0.01, 0.1).is_err());
        assert!(InclinedCylinderSpec::with_axis(10.0, 0.8, [0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn canonical_stress_entries() {
        let a = AnalyticPoiseuille::new(INCLINED_AXIS, 5.0, 0.01, 0.1).unwrap();
        let t = a.canonical_stress([5.0, 0.0, 0.0]);
        let k = -2.0 * 0.01 * 0.1 / 5.0;
        assert_eq!(t.0, [0.0, 0.0, 0.0, 0.0, k, 0.0]);
        let on_axis = a.stress([0.3 * a.axis()[0], 0.3 * a.axis()[1], 0.3 * a.axis()[2]]).unwrap();
        assert!(on_axis.frobenius() < 1e-18);
    }

    #[test]
    fn rotation_is_orthonormal_and_maps_e3_to_axis() {
        let a = AnalyticPoiseuille::new(INCLINED_AXIS, 5.0, 0.01, 0.1).unwrap();
        let r = a.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let n = normalize(INCLINED_AXIS).unwrap();
        assert!(dot(sub(a.axis(), n), sub(a.axis(), n)) < 1e-24);
    }

    #[test]
    fn suite_parameters() {
        let s = InclinedCylinderSpec::new(10.0, 0.8).unwrap();
        assert!((s.peak_speed() - 0.01).abs() < 1e-15);
        assert_eq!(s.length(), 40.0);
        assert!(InclinedCylinderSpec::new(2.0, 0.8).is_err());
        assert!(InclinedCylinderSpec::new(31.0, 0.8).is_err());
    }

    #[test]
    fn refinement_metric_algebra() {
        let r: Vec<_> = (0..5).map(|i| ([i as f64, 0.0, 0.0], [0.0, 0.0, 1.0 + i as f64])).collect();
        assert_eq!(grid_refinement_error(&r, &r).unwrap(), 0.0);
        let shifted: Vec<_> = r.iter().map(|(p, v)| (*p, [v[0] + 0.1, v[1], v[2]])).collect();
        assert!((grid_refinement_error(&shifted, &r).unwrap() - 0.1 / 5.0).abs() < 1e-15);
    }
}
