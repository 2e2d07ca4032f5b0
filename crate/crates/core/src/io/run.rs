//! Config-driven steady runs.

use super::config::SimConfig;
use super::snapshot::FieldSnapshot;
use super::vtk::export_vtk;
use super::write_json;
use crate::boundaries::IoletCondition;
use crate::error::{Error, Result};
use crate::geometry::{load_domain, voxelize, VesselSkeleton, VoxelDomain, VoxelizeOptions};
use crate::lbm::{env_workers, SolverOptions};
use crate::rheology::Rheology;
use crate::simulation::{run_steady, RunReport};
use crate::units::UnitBridge;
use log::info;

/// Everything a configured run needs before the first step.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub domain: VoxelDomain,
    pub bridge: UnitBridge<f64>,
    pub rheology: Rheology<f64>,
    pub reference_mmhg: f64,
    pub options: SolverOptions,
}

pub fn prepare(cfg: &SimConfig) -> Result<PreparedRun> {
    cfg.validate()?;
    let mut domain = match (&cfg.skeleton, &cfg.domain) {
        (Some(path), _) => {
            let skeleton = VesselSkeleton::from_file(path)?;
            let dx = cfg.dx_um.expect("validated");
            voxelize(&skeleton, dx, VoxelizeOptions { allow_thin_vessels: cfg.allow_thin_vessels })?
        }
        (None, Some(path)) => load_domain(path)?,
        (None, None) => unreachable!("validated"),
    };
    if let Some(p) = &cfg.iolet_pressures_mmhg {
        if p.len() != domain.iolets.len() {
            return Err(Error::Config(format!("{} iolet pressures given for {} iolets", p.len(), domain.iolets.len())));
        }
        for (io, &v) in domain.iolets.iter_mut().zip(p) {
            io.pressure_mmhg = v;
        }
    }
    let reference_mmhg = cfg
        .reference_mmhg
        .unwrap_or_else(|| domain.iolets.iter().map(|io| io.pressure_mmhg).fold(f64::INFINITY, f64::min));
    let reference_mmhg = if reference_mmhg.is_finite() { reference_mmhg } else { 0.0 };
    let (bridge, rheology) = cfg.lattice_model(domain.dx)?;
    domain.assign_densities(&bridge, reference_mmhg);
    let options = SolverOptions { workers: cfg.workers.or_else(env_workers), ..SolverOptions::default() };
    Ok(PreparedRun { domain, bridge, rheology, reference_mmhg, options })
}

/// Runs to steady state and writes `report.json`, `fields.clbs` and, when
/// enabled, the VTK files into the output directory.
pub fn execute(cfg: &SimConfig) -> Result<(RunReport, FieldSnapshot)> {
    let run = prepare(cfg)?;
    std::fs::create_dir_all(&cfg.output)?;
    info!(
        "{} fluid sites, dx {} um, dt {:e} s, tau at rest {}",
        run.domain.fluid_count(),
        run.domain.dx,
        run.bridge.dt,
        run.rheology.tau_at_rest()
    );
    let conditions = IoletCondition::from_domain(&run.domain);
    let monitor = cfg.monitor(&run.bridge);
    let (solver, outcome) = run_steady(&run.domain, run.rheology, &conditions, &monitor, run.options)?;
    let snapshot = FieldSnapshot::from_solver(&solver, &run.domain, &run.bridge, run.reference_mmhg)?;
    let mut report = RunReport::new(&solver, &run.domain, &run.bridge, &outcome);
    let clbs = cfg.output.join("fields.clbs");
    snapshot.save(&clbs)?;
    report.outputs.push(clbs.display().to_string());
    if cfg.export_vtk {
        for p in export_vtk(&snapshot, &cfg.output, "fields")? {
            report.outputs.push(p.display().to_string());
        }
    }
    write_json(cfg.output.join("report.json"), &report)?;
    Ok((report, snapshot))
}
