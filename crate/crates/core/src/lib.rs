//! Gradient echo memory simulation: transverse fields, Hermite-Gauss modes,
//! atomic diffusion, control-field scattering and a Maxwell-Bloch solver.

pub mod error;
pub mod grid;
pub mod modes;
pub mod params;
pub mod pgm;
pub mod scattering;
pub mod solver;
pub mod transport;
pub mod units;

pub use error::{Error, Result};
pub use grid::{total_power, IntensityMap, TransverseField, TransverseGrid};
pub use params::MemoryParams;
