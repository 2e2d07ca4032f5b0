//! D3Q15 lattice-Boltzmann core.

pub mod kernel;
mod solver;
pub mod velocity_set;

pub use kernel::{collide, equilibrium, macroscopics, moments, noneq_second_moment, shear_from_noneq, shear_rate, strain_rate, stress};
pub use solver::{env_workers, LatticeState, SiteMacro, Solver, SolverOptions};
pub use velocity_set::{direction_of, VelocitySet, C, CS2, OPPOSITE, Q, W};
