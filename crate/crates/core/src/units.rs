//! Conversion between physical (SI) and lattice units.
//!
//! Every kernel works in lattice units (spacing 1, timestep 1, reference
//! density 1). A [`UnitBridge`] carries the three scales needed to go back and
//! forth: the voxel size, the timestep and the physical density that lattice
//! density 1 stands for.

use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Pascal per millimetre of mercury.
pub const MMHG_TO_PA: f64 = 133.322;

/// Default blood density (kg/m^3). Only the kinematic viscosity enters the dynamics.
pub const DEFAULT_BLOOD_DENSITY: f64 = 1000.0;

/// Lattice speed of sound squared.
pub fn cs2<T: Real>() -> T {
    T::one() / T::of(3.0)
}

/// Largest lattice speed accepted before the compressibility guard trips.
pub const MAX_LATTICE_SPEED: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitBridge<T> {
    /// Metres per lattice spacing.
    pub dx: T,
    /// Seconds per timestep.
    pub dt: T,
    /// Physical density (kg/m^3) of lattice density 1.
    pub rho_phys: T,
}

impl<T: Real> UnitBridge<T> {
    pub fn new(dx: T, dt: T, rho_phys: T) -> Result<Self> {
        if !(dx > T::zero() && dt > T::zero() && rho_phys > T::zero()) {
            return Err(Error::domain(format!(
                "unit bridge needs dx, dt, rho > 0 (got {dx}, {dt}, {rho_phys})"
            )));
        }
        Ok(Self { dx, dt, rho_phys })
    }

    /// Picks the timestep so that a fluid of dynamic viscosity `eta` relaxes with `tau`.
    pub fn for_relaxation_time(eta: T, tau: T, dx: T, rho_phys: T) -> Result<Self> {
        if !(eta > T::zero()) {
            return Err(Error::domain(format!("viscosity must be positive, got {eta}")));
        }
        let nu_lat = nu_from_tau(tau)?;
        let dt = nu_lat * dx * dx * rho_phys / eta;
        Self::new(dx, dt, rho_phys)
    }

    /// Lattice velocity scale dx/dt (m/s per lattice speed unit).
    pub fn velocity_scale(&self) -> T {
        self.dx / self.dt
    }

    /// Stress scale rho (dx/dt)^2 (Pa per lattice stress unit).
    pub fn stress_scale(&self) -> T {
        let u = self.velocity_scale();
        self.rho_phys * u * u
    }

    /// Physical speed of sound squared, dx^2 / (3 dt^2).
    pub fn sound_speed_sq(&self) -> T {
        let u = self.velocity_scale();
        u * u * cs2::<T>()
    }

    /// Lattice kinematic viscosity (eta/rho) dt/dx^2.
    pub fn lattice_viscosity(&self, eta: T) -> Result<T> {
        if !(eta > T::zero()) {
            return Err(Error::domain(format!("viscosity must be positive, got {eta}")));
        }
        Ok(eta / self.rho_phys * self.dt / (self.dx * self.dx))
    }

    /// Dynamic viscosity (Pa s) of a lattice kinematic viscosity.
    pub fn physical_viscosity(&self, nu_lat: T) -> T {
        nu_lat * self.rho_phys * self.dx * self.dx / self.dt
    }

    /// Lattice density of a pressure, with `reference` mapped to density 1.
    pub fn pressure_to_lattice_density(&self, p_mmhg: T, reference_mmhg: T) -> T {
        T::one() + (p_mmhg - reference_mmhg) * T::of(MMHG_TO_PA) / (self.rho_phys * self.sound_speed_sq())
    }

    /// Pressure (Pa, absolute w.r.t. `reference_mmhg`) of a lattice density.
    pub fn lattice_density_to_pressure_pa(&self, rho_lat: T, reference_mmhg: T) -> T {
        reference_mmhg * T::of(MMHG_TO_PA) + (rho_lat - T::one()) * self.rho_phys * self.sound_speed_sq()
    }

    pub fn velocity_to_lattice(&self, v: T) -> T {
        v / self.velocity_scale()
    }

    pub fn velocity_to_physical(&self, v_lat: T) -> T {
        v_lat * self.velocity_scale()
    }

    pub fn length_to_lattice(&self, l: T) -> T {
        l / self.dx
    }

    pub fn length_to_physical(&self, l_lat: T) -> T {
        l_lat * self.dx
    }

    pub fn time_to_lattice(&self, t: T) -> T {
        t / self.dt
    }

    pub fn time_to_physical(&self, t_lat: T) -> T {
        t_lat * self.dt
    }

    /// Shear rate (1/s) of a lattice shear rate.
    pub fn shear_rate_to_physical(&self, g_lat: T) -> T {
        g_lat / self.dt
    }

    pub fn shear_rate_to_lattice(&self, g: T) -> T {
        g * self.dt
    }

    pub fn stress_to_physical(&self, s_lat: T) -> T {
        s_lat * self.stress_scale()
    }

    pub fn stress_to_lattice(&self, s: T) -> T {
        s / self.stress_scale()
    }

    /// Volumetric flow rate (m^3/s) of a lattice flux (lattice volume per step).
    pub fn flow_rate_to_physical(&self, q_lat: T) -> T {
        q_lat * self.dx * self.dx * self.dx / self.dt
    }

    /// Converts a physical speed and rejects it when it breaks the lattice Mach limit.
    pub fn checked_lattice_velocity(&self, v: T) -> Result<T> {
        let v_lat = self.velocity_to_lattice(v);
        if v_lat.abs() >= T::of(MAX_LATTICE_SPEED) {
            return Err(Error::domain(format!(
                "lattice speed {v_lat} exceeds the compressibility limit {MAX_LATTICE_SPEED}"
            )));
        }
        Ok(v_lat)
    }
}

/// tau = 1/2 + nu / cs^2.
pub fn tau_from_nu<T: Real>(nu_lat: T) -> Result<T> {
    if !(nu_lat > T::zero()) {
        return Err(Error::domain(format!("lattice viscosity must be positive, got {nu_lat}")));
    }
    Ok(T::of(0.5) + nu_lat / cs2::<T>())
}

/// nu = cs^2 (tau - 1/2).
pub fn nu_from_tau<T: Real>(tau: T) -> Result<T> {
    if !(tau > T::of(0.5)) {
        return Err(Error::domain(format!("relaxation time must exceed 1/2, got {tau}")));
    }
    Ok((tau - T::of(0.5)) * cs2::<T>())
}
