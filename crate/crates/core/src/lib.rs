//! Pseudo-spectral solvers for the rescaled anisotropic Navier-Stokes
//! equations and their hydrostatic limits on the periodic box `(-1,1)^3`,
//! with anisotropic space-time norms and a sampled verifier for
//! quadratic-inequality bootstrap arguments.
//!
//! Everything is generic over the floating-point type; the aliases below fix
//! it to `f64` (and `f32` where useful).

pub mod bootstrap;
pub mod error;
pub mod fields;
pub mod initial;
pub mod norms;
pub mod scalar;
pub mod solvers;
pub mod spectral;

pub use error::{Error, Result};
pub use fields::{System, VelocityState};
pub use scalar::Real;
pub use spectral::{Axis, Grid, Parity, PhysicalField, SpectralField};

pub type Grid64 = spectral::Grid<f64>;
pub type Grid32 = spectral::Grid<f32>;
pub type Field64 = spectral::SpectralField<f64>;
pub type Field32 = spectral::SpectralField<f32>;
pub type PhysicalField64 = spectral::PhysicalField<f64>;
pub type State64 = fields::VelocityState<f64>;
pub type State32 = fields::VelocityState<f32>;
pub type SimConfig64 = solvers::SimConfig<f64>;
pub type Accumulator64 = norms::NormAccumulator<f64>;
pub type Sampled64 = bootstrap::SampledFunction<f64>;
