//! Physical constants and unit conversions.
//!
//! Everything inside the crate is SI with rates as angular frequencies.
//! Conversions happen once, at the configuration boundary.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of a rubidium-87 atom in kg.
pub const RB87_MASS: f64 = 86.909_180_527 * ATOMIC_MASS_UNIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionUnit {
    Cm2PerS,
    M2PerS,
}

impl DiffusionUnit {
    fn to_si_factor(self) -> f64 {
        match self {
            DiffusionUnit::Cm2PerS => 1e-4,
            DiffusionUnit::M2PerS => 1.0,
        }
    }
}

impl FromStr for DiffusionUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cm2/s" | "cm²/s" | "cm^2/s" | "cm2_s" => Ok(DiffusionUnit::Cm2PerS),
            "m2/s" | "m²/s" | "m^2/s" | "m2_s" => Ok(DiffusionUnit::M2PerS),
            other => Err(Error::UnknownUnit(other.to_string())),
        }
    }
}

impl fmt::Display for DiffusionUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffusionUnit::Cm2PerS => write!(f, "cm2/s"),
            DiffusionUnit::M2PerS => write!(f, "m2/s"),
        }
    }
}

pub fn convert_diffusion_units(value: f64, from: DiffusionUnit, to: DiffusionUnit) -> f64 {
    if from == to {
        return value;
    }
    value * from.to_si_factor() / to.to_si_factor()
}

/// String-tagged variant of [`convert_diffusion_units`].
pub fn convert_diffusion_units_tagged(value: f64, from: &str, to: &str) -> Result<f64> {
    Ok(convert_diffusion_units(value, from.parse()?, to.parse()?))
}

/// Cyclic frequency in MHz to angular frequency in rad/s.
pub fn mhz_to_rad_s(mhz: f64) -> f64 {
    TAU * mhz * 1e6
}

pub fn rad_s_to_mhz(rad_s: f64) -> f64 {
    rad_s / (TAU * 1e6)
}
