use crate::rheology::CarreauYasudaParams;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Velocity and density of every fluid site at the last check that passed the
/// stability test.
#[derive(Debug, Clone)]
pub struct StableFields {
    pub step: u64,
    pub density: Vec<f64>,
    pub velocity: Vec<[f64; 3]>,
}

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation (non-positive viscosity, negative shear rate, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid skeleton: {0}")]
    Skeleton(String),

    #[error("segment {segment} has diameter {diameter_um} um, below the minimum of {min_um} um (3 lattice spacings)")]
    MinDiameter { segment: usize, diameter_um: f64, min_um: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("simulation unstable at step {step}: {detail}")]
    Instability { step: u64, detail: String, last_stable: Option<Box<StableFields>> },

    #[error("no convergence after {steps} steps (last residual {last_residual:e})")]
    Timeout { steps: u64, last_residual: f64, history: Vec<(u64, f64)> },

    #[error("fit did not converge after {evaluations} evaluations: {message}")]
    Fit { message: String, evaluations: usize, best: Option<CarreauYasudaParams> },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Skeleton(_) => "skeleton",
            Error::MinDiameter { .. } => "min_diameter",
            Error::Geometry(_) => "geometry",
            Error::Config(_) => "config",
            Error::Instability { .. } => "instability",
            Error::Timeout { .. } => "timeout",
            Error::Fit { .. } => "fit",
            Error::Format(_) => "format",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
            Error::Io(_) => "io",
        }
    }
}
