//! Lattice-Boltzmann blood flow in voxelized vessel networks.
//!
//! The numerical core ([`lbm`], [`boundaries`], [`rheology`]) is generic over
//! the scalar type through [`Real`]; the aliases below fix it to `f64` or `f32`.

pub mod assets;
pub mod boundaries;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lbm;
pub mod rheology;
pub mod scalar;
pub mod simulation;
pub mod tensor;
pub mod units;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Solver = lbm::Solver<f64>;
pub type SolverF32 = lbm::Solver<f32>;
pub type Rheology = rheology::Rheology<f64>;
pub type RheologyF32 = rheology::Rheology<f32>;
pub type UnitBridge = units::UnitBridge<f64>;
