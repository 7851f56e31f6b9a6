//! Maxwell-Bloch solver for the gradient echo memory.
//!
//! [`simulate_echo_1d`] integrates the longitudinal problem on a single
//! transverse pixel; [`simulate_echo_3d`] adds a small transverse grid with
//! diffraction and diffusion. Both share one stepper, so a 1x1 transverse
//! grid reproduces the 1D result.

mod engine;
mod pulse;
mod record;
mod schedule;
mod spectrum;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{TransverseField, TransverseGrid};
use crate::params::MemoryParams;
use crate::scattering::ControlMask;

pub use pulse::{integrate_between, intensity_sigma, PulseEnvelope, TimeSeries};
pub use record::{recall_efficiencies, EchoRecord, SpinWaveState, EFFICIENCY_SLACK};
pub use schedule::{GradientSchedule, Segment};
pub use spectrum::{raman_absorption_profile, two_photon_linewidth, RamanSpectrum};

/// Largest grid the 3D solver accepts along any axis.
pub const MAX_3D_POINTS: usize = 64;

/// Treatment of the optical coherence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AtomicModel {
    /// rho13 slaved to the probe and rho12 (large one-photon detuning).
    #[default]
    Adiabatic,
    /// rho13 integrated as a dynamical variable.
    ThreeLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Longitudinal nodes spanning the cell, ends included.
    pub nz: usize,
    /// Requested time step; reduced automatically when above the stability
    /// bound. `None` uses the bound.
    pub dt: Option<f64>,
    pub model: AtomicModel,
    /// Times at which to store the spin wave.
    pub snapshots: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nz: 128,
            dt: None,
            model: AtomicModel::Adiabatic,
            snapshots: Vec::new(),
        }
    }
}

/// Transverse shape of the control Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ControlProfile {
    #[default]
    Uniform,
    /// Amplitude `exp(-r^2 / waist^2)` about `center`.
    Gaussian { waist: f64, center: (f64, f64) },
}

impl ControlProfile {
    fn amplitudes(&self, grid: &TransverseGrid) -> Vec<f64> {
        match *self {
            Self::Uniform => vec![1.0; grid.len()],
            Self::Gaussian { waist, center } => {
                let mut out = Vec::with_capacity(grid.len());
                for y in grid.ys() {
                    for x in grid.xs() {
                        let r2 = (x - center.0).powi(2) + (y - center.1).powi(2);
                        out.push((-r2 / (waist * waist)).exp());
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Solver3dConfig {
    pub solver: SolverConfig,
    pub control: ControlProfile,
    /// Control gate applied from the gradient flip onward.
    pub recall_mask: Option<ControlMask>,
    /// Include paraxial diffraction of the probe.
    pub diffraction: bool,
}

/// Longitudinal simulation of one memory run. Returns the echo record and the
/// spin waves stored at the configured snapshot times.
pub fn simulate_echo_1d(
    params: &MemoryParams,
    input: &PulseEnvelope,
    schedule: &GradientSchedule,
    config: &SolverConfig,
) -> Result<(EchoRecord, Vec<SpinWaveState>)> {
    let setup = engine::Setup {
        params,
        model: config.model,
        nz: config.nz,
        dt: config.dt,
        snapshots: &config.snapshots,
        grid: TransverseGrid::point(1.0, 1.0),
        mode: vec![Complex64::new(1.0, 0.0)],
        control: vec![1.0],
        recall_mask: None,
        diffraction: false,
        resolve_output: false,
    };
    let out = engine::run(&setup, input, schedule)?;
    let record = build_record(input, None, &out, schedule)?;
    Ok((record, out.snapshots))
}

/// Simulation with transverse structure on a small grid. The input field is
/// normalized to unit power; its amplitude in time is `input_temporal`.
pub fn simulate_echo_3d(
    params: &MemoryParams,
    input_transverse: &TransverseField,
    input_temporal: &PulseEnvelope,
    schedule: &GradientSchedule,
    config: &Solver3dConfig,
) -> Result<(EchoRecord, Vec<SpinWaveState>)> {
    let grid = *input_transverse.grid();
    let nz = config.solver.nz;
    if nz > MAX_3D_POINTS || grid.nx() > MAX_3D_POINTS || grid.ny() > MAX_3D_POINTS {
        return Err(Error::GridTooLarge(format!(
            "{}x{}x{nz} exceeds {MAX_3D_POINTS} points per axis",
            grid.nx(),
            grid.ny()
        )));
    }
    let mode_field = input_transverse.normalized()?;
    let recall_mask = match &config.recall_mask {
        Some(m) => Some(m.values(&grid)?.into_iter().map(f64::sqrt).collect()),
        None => None,
    };
    let setup = engine::Setup {
        params,
        model: config.solver.model,
        nz,
        dt: config.solver.dt,
        snapshots: &config.solver.snapshots,
        grid,
        mode: mode_field.values().to_vec(),
        control: config.control.amplitudes(&grid),
        recall_mask,
        diffraction: config.diffraction,
        resolve_output: true,
    };
    let out = engine::run(&setup, input_temporal, schedule)?;
    let record = build_record(input_temporal, Some(mode_field), &out, schedule)?;
    Ok((record, out.snapshots))
}

fn build_record(
    input: &PulseEnvelope,
    input_transverse: Option<TransverseField>,
    out: &engine::RunOutput,
    schedule: &GradientSchedule,
) -> Result<EchoRecord> {
    let t_final = schedule.t_final();
    let t_recall = out.recall_start;
    let input_energy = integrate_between(&out.times, &out.input_power, 0.0, t_final);
    let transmitted = integrate_between(&out.times, &out.power, 0.0, t_recall);
    let echo = integrate_between(&out.times, &out.power, t_recall, t_final);
    let proj_power: Vec<f64> = out.projection.iter().map(|v| v.norm_sqr()).collect();
    let echo_mode = integrate_between(&out.times, &proj_power, t_recall, t_final);
    let (total, overlap) = if input_energy > 0.0 {
        (
            echo / input_energy,
            (echo_mode / input_energy).min(echo / input_energy),
        )
    } else {
        (0.0, 0.0)
    };
    let output_transverse = match &input_transverse {
        Some(f) if input_energy > 0.0 => {
            let values = out
                .fluence
                .iter()
                .zip(&out.peak_field)
                .map(|(&e, p)| {
                    let amp = (e / input_energy).sqrt();
                    if p.norm_sqr() > 0.0 {
                        p / p.norm() * amp
                    } else {
                        Complex64::new(amp, 0.0)
                    }
                })
                .collect();
            Some(TransverseField::new(*f.grid(), values)?)
        }
        Some(f) => Some(TransverseField::zeros(*f.grid())),
        None => None,
    };
    let record = EchoRecord {
        input: input.clone(),
        input_transverse,
        output: TimeSeries {
            times: out.times.clone(),
            values: out.projection.clone(),
        },
        output_power: out.power.clone(),
        output_transverse,
        recall_window: (t_recall, t_final),
        input_energy,
        transmitted_energy: transmitted,
        echo_energy: echo,
        total_efficiency: total,
        overlap_efficiency: overlap,
    };
    record.flag_overshoot();
    Ok(record)
}

#[cfg(test)]
mod tests;
