//! Shear-rate dependent viscosity.
//!
//! The Carreau-Yasuda law
//!
//! ```text
//! eta(g) = eta_inf + (eta_0 - eta_inf) * [1 + (lambda g)^a]^((n - 1) / a)
//! ```
//!
//! is evaluated in physical units by [`CarreauYasudaParams`]. The solver uses
//! [`Rheology`], which maps a lattice shear rate straight to a relaxation time.

mod fit;

pub use fit::{fit_cy, fit_cy_default, initial_guess, FitReport, MAX_EVALUATIONS, SIMPLEX_TOLERANCE};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::units::{tau_from_nu, UnitBridge};
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarreauYasudaParams {
    /// Zero-shear viscosity (Pa s).
    pub eta0: f64,
    /// Infinite-shear viscosity (Pa s).
    pub eta_inf: f64,
    /// Relaxation time (s).
    pub lambda: f64,
    pub a: f64,
    pub n: f64,
}

impl CarreauYasudaParams {
    /// Murine blood fit used throughout the project.
    pub const MURINE_BLOOD: CarreauYasudaParams =
        CarreauYasudaParams { eta0: 14.49e-3, eta_inf: 3.265e-3, lambda: 0.1839, a: 2.707, n: 0.4136 };

    pub fn new(eta0: f64, eta_inf: f64, lambda: f64, a: f64, n: f64) -> Result<Self> {
        let p = Self { eta0, eta_inf, lambda, a, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.eta0 > self.eta_inf
            && self.eta_inf > 0.0
            && self.lambda > 0.0
            && self.a > 0.0
            && self.n > 0.0
            && self.n < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "Carreau-Yasuda parameters need eta0 > eta_inf > 0, lambda > 0, a > 0, 0 < n < 1: {self:?}"
            )))
        }
    }

    /// Shear-thinning factor [1 + (lambda g)^a]^((n-1)/a), in (0, 1].
    pub fn thinning_factor(&self, gamma_dot: f64) -> f64 {
        thinning(self.lambda * gamma_dot, self.a, self.n)
    }

    /// Viscosity (Pa s) at shear rate `gamma_dot` (1/s).
    pub fn eval_viscosity(&self, gamma_dot: f64) -> Result<f64> {
        if !(gamma_dot >= 0.0) {
            return Err(Error::domain(format!("shear rate must be non-negative, got {gamma_dot}")));
        }
        Ok(self.eval_unchecked(gamma_dot))
    }

    pub(crate) fn eval_unchecked(&self, gamma_dot: f64) -> f64 {
        let eta = self.eta_inf + (self.eta0 - self.eta_inf) * self.thinning_factor(gamma_dot);
        eta.clamp(self.eta_inf, self.eta0)
    }
}

#[inline(always)]
fn thinning<T: Real>(lambda_g: T, a: T, n: T) -> T {
    (T::one() + lambda_g.powf(a)).powf((n - T::one()) / a)
}

/// Relaxation time for a physical shear rate: viscosity law, then lattice
/// viscosity, then tau, clamped to the window spanned by `eta_inf` and `eta0`.
pub fn tau_field(params: &CarreauYasudaParams, gamma_dot: f64, bridge: &UnitBridge<f64>) -> Result<f64> {
    let g = gamma_dot.max(0.0);
    let eta = params.eval_unchecked(g);
    let tau = tau_from_nu(bridge.lattice_viscosity(eta)?)?;
    let lo = tau_from_nu(bridge.lattice_viscosity(params.eta_inf)?)?;
    let hi = tau_from_nu(bridge.lattice_viscosity(params.eta0)?)?;
    Ok(tau.clamp(lo, hi))
}

/// One tabulated viscosity measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscositySample {
    /// 1/s
    pub shear_rate: f64,
    /// Pa s
    pub viscosity: f64,
    pub source_label: String,
}

#[derive(Deserialize)]
struct CsvRow {
    shear_rate_per_s: f64,
    viscosity_mpas: f64,
    #[serde(default)]
    source: String,
}

/// Reads `shear_rate_per_s,viscosity_mpas,source` rows.
pub fn read_samples_csv<R: Read>(reader: R) -> Result<Vec<ViscositySample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        if !(row.shear_rate_per_s >= 0.0) || !(row.viscosity_mpas > 0.0) {
            return Err(Error::domain(format!(
                "sample needs shear rate >= 0 and viscosity > 0: {} 1/s, {} mPa s",
                row.shear_rate_per_s, row.viscosity_mpas
            )));
        }
        out.push(ViscositySample {
            shear_rate: row.shear_rate_per_s,
            viscosity: row.viscosity_mpas * 1e-3,
            source_label: row.source,
        });
    }
    Ok(out)
}

pub fn read_samples_file(path: impl AsRef<Path>) -> Result<Vec<ViscositySample>> {
    read_samples_csv(std::fs::File::open(path)?)
}

/// Murine blood viscosity measurements (Vogel and Windberger groups).
pub const MURINE_VISCOSITY_CSV: &str = include_str!("../../assets/murine_viscosity.csv");

pub fn murine_samples() -> Vec<ViscositySample> {
    read_samples_csv(MURINE_VISCOSITY_CSV.as_bytes()).expect("bundled viscosity table is valid")
}

/// Shear-rate window of a Carreau-Yasuda fluid expressed directly as
/// relaxation times.
///
/// `tau(g) = tau_inf + (tau_0 - tau_inf) * [1 + (lambda g)^a]^((n-1)/a)` with
/// `g` and `lambda` in lattice units. When the window is the image of
/// `[eta_inf, eta0]` under a [`UnitBridge`] this is exactly the composition
/// viscosity -> lattice viscosity -> tau.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyRelaxation<T> {
    pub tau_inf: T,
    pub tau_0: T,
    /// lambda / dt
    pub lambda: T,
    pub a: T,
    pub n: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rheology<T> {
    Newtonian { tau: T },
    CarreauYasuda(CyRelaxation<T>),
}

impl<T: Real> Rheology<T> {
    pub fn newtonian(tau: T) -> Result<Self> {
        if !(tau > T::of(0.5)) {
            return Err(Error::domain(format!("relaxation time must exceed 1/2, got {tau}")));
        }
        Ok(Rheology::Newtonian { tau })
    }

    /// Newtonian fluid of viscosity `eta` (Pa s) on the lattice given by `bridge`.
    pub fn newtonian_physical(eta: f64, bridge: &UnitBridge<f64>) -> Result<Self> {
        let tau = tau_from_nu(bridge.lattice_viscosity(eta)?)?;
        Self::newtonian(T::of(tau))
    }

    /// Carreau-Yasuda fluid whose plateaus map through `bridge`.
    pub fn carreau_yasuda(params: &CarreauYasudaParams, bridge: &UnitBridge<f64>) -> Result<Self> {
        params.validate()?;
        let tau_inf = tau_from_nu(bridge.lattice_viscosity(params.eta_inf)?)?;
        let tau_0 = tau_from_nu(bridge.lattice_viscosity(params.eta0)?)?;
        Self::carreau_yasuda_window(params, bridge, tau_inf, tau_0)
    }

    /// Carreau-Yasuda shape with both relaxation-time plateaus pinned.
    pub fn carreau_yasuda_window(
        params: &CarreauYasudaParams,
        bridge: &UnitBridge<f64>,
        tau_inf: f64,
        tau_0: f64,
    ) -> Result<Self> {
        params.validate()?;
        if !(tau_inf > 0.5 && tau_0 > tau_inf) {
            return Err(Error::domain(format!("need 1/2 < tau_inf < tau_0, got {tau_inf}, {tau_0}")));
        }
        Ok(Rheology::CarreauYasuda(CyRelaxation {
            tau_inf: T::of(tau_inf),
            tau_0: T::of(tau_0),
            lambda: T::of(params.lambda / bridge.dt),
            a: T::of(params.a),
            n: T::of(params.n),
        }))
    }

    /// Relaxation time for a lattice shear rate.
    #[inline(always)]
    pub fn tau(&self, gamma_lat: T) -> T {
        match self {
            Rheology::Newtonian { tau } => *tau,
            Rheology::CarreauYasuda(cy) => {
                let f = thinning(cy.lambda * gamma_lat.max(T::zero()), cy.a, cy.n);
                let tau = cy.tau_inf + (cy.tau_0 - cy.tau_inf) * f;
                tau.max(cy.tau_inf).min(cy.tau_0)
            }
        }
    }

    pub fn tau_at_rest(&self) -> T {
        self.tau(T::zero())
    }

    pub fn is_newtonian(&self) -> bool {
        matches!(self, Rheology::Newtonian { .. })
    }

    /// Lattice dynamic viscosity (reference density 1) for a relaxation time.
    #[inline(always)]
    pub fn lattice_eta(tau: T) -> T {
        (tau - T::of(0.5)) / T::of(3.0)
    }
}
