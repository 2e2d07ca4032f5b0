//! JSON run configuration.

use crate::error::{Error, Result};
use crate::rheology::{fit_cy_default, read_samples_file, CarreauYasudaParams, Rheology};
use crate::simulation::{ConvergenceMonitor, DEFAULT_CHECK_INTERVAL, DEFAULT_EPS_TOL, DEFAULT_MAX_STEPS};
use crate::units::{UnitBridge, DEFAULT_BLOOD_DENSITY};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// How the timestep is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    /// Explicit timestep in seconds.
    DtS(f64),
    /// Relaxation time of the Newtonian viscosity, or of the high-shear
    /// plateau for Carreau-Yasuda.
    Tau(f64),
    /// Both Carreau-Yasuda plateaus pinned; dt follows from `tau_inf`.
    TauWindow { tau_inf: f64, tau_0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RheologySource {
    Newtonian { eta_pa_s: f64 },
    CarreauYasuda(CarreauYasudaParams),
    /// Carreau-Yasuda parameters fitted to a `shear_rate_per_s,viscosity_mpas,source` CSV.
    CyFit { data: PathBuf },
}

fn default_rho() -> f64 {
    DEFAULT_BLOOD_DENSITY
}
fn default_v_ref() -> f64 {
    0.05
}
fn default_eps() -> f64 {
    DEFAULT_EPS_TOL
}
fn default_check() -> u64 {
    DEFAULT_CHECK_INTERVAL
}
fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Skeleton JSON to voxelize. Exactly one of `skeleton` and `domain` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton: Option<PathBuf>,
    /// Pre-built `CLBD` domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<PathBuf>,
    /// Output directory.
    pub output: PathBuf,
    /// Lattice spacing in micrometres. Ignored when a domain file is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx_um: Option<f64>,
    pub timing: Timing,
    pub rheology: RheologySource,
    /// Pressures replacing the skeleton's iolet pressures, in iolet order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iolet_pressures_mmhg: Option<Vec<f64>>,
    /// Pressure mapped to lattice density 1; defaults to the lowest iolet pressure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_mmhg: Option<f64>,
    #[serde(default = "default_rho")]
    pub blood_density: f64,
    /// Convergence reference velocity (m/s).
    #[serde(default = "default_v_ref")]
    pub v_ref_m_per_s: f64,
    #[serde(default = "default_eps")]
    pub eps_tol: f64,
    #[serde(default = "default_check")]
    pub check_interval: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub allow_thin_vessels: bool,
    #[serde(default = "default_true")]
    pub export_vtk: bool,
}

impl SimConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads a config file, resolving relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json_str(&std::fs::read_to_string(path)?)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.skeleton.as_mut() {
            fix(p);
        }
        if let Some(p) = self.domain.as_mut() {
            fix(p);
        }
        if let RheologySource::CyFit { data } = &mut self.rheology {
            fix(data);
        }
        fix(&mut self.output);
    }

    /// Checks value ranges and that every input path exists.
    pub fn validate(&self) -> Result<()> {
        let input = match (&self.skeleton, &self.domain) {
            (Some(p), None) => {
                match self.dx_um {
                    Some(dx) if dx > 0.0 => {}
                    _ => return Err(Error::Config("a skeleton input needs dx_um > 0".into())),
                }
                p
            }
            (None, Some(p)) => p,
            _ => return Err(Error::Config("set exactly one of `skeleton` and `domain`".into())),
        };
        require_file(input)?;
        if let RheologySource::CyFit { data } = &self.rheology {
            require_file(data)?;
        }
        match self.timing {
            Timing::DtS(dt) if !(dt > 0.0) => return Err(Error::Config(format!("dt_s must be positive, got {dt}"))),
            Timing::Tau(t) if !(t > 0.5) => return Err(Error::Config(format!("tau must exceed 1/2, got {t}"))),
            Timing::TauWindow { tau_inf, tau_0 } => {
                if !(tau_inf > 0.5 && tau_0 > tau_inf) {
                    return Err(Error::Config(format!("need 1/2 < tau_inf < tau_0, got {tau_inf}, {tau_0}")));
                }
                if matches!(self.rheology, RheologySource::Newtonian { .. }) {
                    return Err(Error::Config("tau_window needs a Carreau-Yasuda rheology".into()));
                }
            }
            _ => {}
        }
        if let RheologySource::Newtonian { eta_pa_s } = self.rheology {
            if !(eta_pa_s > 0.0) {
                return Err(Error::Config(format!("viscosity must be positive, got {eta_pa_s}")));
            }
        }
        if let RheologySource::CarreauYasuda(p) = &self.rheology {
            p.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if !(self.blood_density > 0.0) {
            return Err(Error::Config("blood_density must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.monitor_unscaled().validate().map_err(|e| Error::Config(e.to_string()))
    }

    fn monitor_unscaled(&self) -> ConvergenceMonitor {
        ConvergenceMonitor::lattice(self.v_ref_m_per_s)
            .with_tolerance(self.eps_tol)
            .with_check_interval(self.check_interval)
            .with_max_steps(self.max_steps)
    }

    pub fn monitor(&self, bridge: &UnitBridge<f64>) -> ConvergenceMonitor {
        ConvergenceMonitor::physical(self.v_ref_m_per_s, bridge)
            .with_tolerance(self.eps_tol)
            .with_check_interval(self.check_interval)
            .with_max_steps(self.max_steps)
    }

    /// Carreau-Yasuda parameters of the configured source, if any.
    pub fn cy_params(&self) -> Result<Option<CarreauYasudaParams>> {
        Ok(match &self.rheology {
            RheologySource::Newtonian { .. } => None,
            RheologySource::CarreauYasuda(p) => Some(*p),
            RheologySource::CyFit { data } => Some(fit_cy_default(&read_samples_file(data)?)?.params),
        })
    }

    /// Unit bridge and lattice rheology for a lattice spacing of `dx_um`.
    pub fn lattice_model(&self, dx_um: f64) -> Result<(UnitBridge<f64>, Rheology<f64>)> {
        let dx = dx_um * 1e-6;
        let rho = self.blood_density;
        let cy = self.cy_params()?;
        let plateau = match (&self.rheology, &cy) {
            (RheologySource::Newtonian { eta_pa_s }, _) => *eta_pa_s,
            (_, Some(p)) => p.eta_inf,
            _ => unreachable!("non-Newtonian sources yield parameters"),
        };
        let bridge = match self.timing {
            Timing::DtS(dt) => UnitBridge::new(dx, dt, rho)?,
            Timing::Tau(tau) => UnitBridge::for_relaxation_time(plateau, tau, dx, rho)?,
            Timing::TauWindow { tau_inf, .. } => UnitBridge::for_relaxation_time(plateau, tau_inf, dx, rho)?,
        };
        let rheology = match (cy, self.timing) {
            (None, _) => Rheology::newtonian_physical(plateau, &bridge)?,
            (Some(p), Timing::TauWindow { tau_inf, tau_0 }) => Rheology::carreau_yasuda_window(&p, &bridge, tau_inf, tau_0)?,
            (Some(p), _) => Rheology::carreau_yasuda(&p, &bridge)?,
        };
        Ok((bridge, rheology))
    }
}

fn require_file(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("input file {} does not exist", p.display())))
    }
}

/// JSON schema of [`SimConfig`], printed by `caplb run --print-schema`.
pub fn config_schema() -> serde_json::Value {
    let number = |desc: &str| serde_json::json!({ "type": "number", "description": desc });
    serde_json::json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "caplb run configuration",
        "type": "object",
        "additionalProperties": false,
        "required": ["output", "timing", "rheology"],
        "oneOf": [
            { "required": ["skeleton", "dx_um"], "not": { "required": ["domain"] } },
            { "required": ["domain"], "not": { "required": ["skeleton"] } }
        ],
        "properties": {
            "skeleton": { "type": "string", "description": "vessel skeleton JSON, relative to the config file" },
            "domain": { "type": "string", "description": "CLBD domain file, relative to the config file" },
            "output": { "type": "string", "description": "output directory" },
            "dx_um": { "type": "number", "exclusiveMinimum": 0, "description": "lattice spacing (micrometres)" },
            "timing": {
                "oneOf": [
                    { "type": "object", "required": ["dt_s"], "additionalProperties": false,
                      "properties": { "dt_s": number("timestep (s)") } },
                    { "type": "object", "required": ["tau"], "additionalProperties": false,
                      "properties": { "tau": number("relaxation time of the (high-shear) viscosity, > 0.5") } },
                    { "type": "object", "required": ["tau_window"], "additionalProperties": false,
                      "properties": { "tau_window": {
                          "type": "object", "required": ["tau_inf", "tau_0"], "additionalProperties": false,
                          "properties": { "tau_inf": number("high-shear plateau"), "tau_0": number("zero-shear plateau") } } } }
                ]
            },
            "rheology": {
                "oneOf": [
                    { "type": "object", "required": ["newtonian"], "additionalProperties": false,
                      "properties": { "newtonian": { "type": "object", "required": ["eta_pa_s"],
                          "properties": { "eta_pa_s": number("dynamic viscosity (Pa s)") } } } },
                    { "type": "object", "required": ["carreau_yasuda"], "additionalProperties": false,
                      "properties": { "carreau_yasuda": { "type": "object",
                          "required": ["eta0", "eta_inf", "lambda", "a", "n"],
                          "properties": {
                              "eta0": number("zero-shear viscosity (Pa s)"),
                              "eta_inf": number("infinite-shear viscosity (Pa s)"),
                              "lambda": number("relaxation time (s)"),
                              "a": number("transition exponent"),
                              "n": number("power-law index")
                          } } } },
                    { "type": "object", "required": ["cy_fit"], "additionalProperties": false,
                      "properties": { "cy_fit": { "type": "object", "required": ["data"],
                          "properties": { "data": { "type": "string", "description": "viscosity samples CSV (shear_rate_per_s,viscosity_mpas,source)" } } } } }
                ]
            },
            "iolet_pressures_mmhg": { "type": "array", "items": { "type": "number" } },
            "reference_mmhg": number("pressure at lattice density 1"),
            "blood_density": { "type": "number", "default": DEFAULT_BLOOD_DENSITY },
            "v_ref_m_per_s": { "type": "number", "default": 0.05 },
            "eps_tol": { "type": "number", "default": DEFAULT_EPS_TOL },
            "check_interval": { "type": "integer", "minimum": 1, "default": DEFAULT_CHECK_INTERVAL },
            "max_steps": { "type": "integer", "minimum": 1, "default": DEFAULT_MAX_STEPS },
            "workers": { "type": "integer", "minimum": 1 },
            "allow_thin_vessels": { "type": "boolean", "default": false },
            "export_vtk": { "type": "boolean", "default": true }
        }
    })
}
