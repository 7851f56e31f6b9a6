use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{total_power, TransverseField};
use crate::modes::mode_overlap;

use super::pulse::{PulseEnvelope, TimeSeries};

/// Tolerance above unity before an efficiency is flagged as overshoot.
pub const EFFICIENCY_SLACK: f64 = 0.02;

/// Coherences on the longitudinal grid at one instant. Arrays are z-major:
/// sample `(j, pixel)` sits at `j * npix + pixel`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinWaveState {
    pub time: f64,
    pub z: Vec<f64>,
    pub npix: usize,
    pub rho12: Vec<Complex64>,
    pub rho13: Option<Vec<Complex64>>,
}

impl SpinWaveState {
    /// `rho12(z)` for one transverse pixel.
    pub fn rho12_column(&self, pixel: usize) -> Vec<Complex64> {
        self.rho12
            .iter()
            .skip(pixel)
            .step_by(self.npix)
            .copied()
            .collect()
    }

    pub fn max_rho12(&self) -> f64 {
        self.rho12.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Input and recalled light of one memory run.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoRecord {
    pub input: PulseEnvelope,
    /// Transverse profile of the input, when the run resolves one.
    pub input_transverse: Option<TransverseField>,
    /// Output envelope; in 3D the projection onto the input mode.
    pub output: TimeSeries,
    /// Output power at the times of `output`.
    pub output_power: Vec<f64>,
    /// Recalled transverse field, scaled so its power relative to the input
    /// power equals the total efficiency.
    pub output_transverse: Option<TransverseField>,
    pub recall_window: (f64, f64),
    pub input_energy: f64,
    pub transmitted_energy: f64,
    pub echo_energy: f64,
    pub total_efficiency: f64,
    pub overlap_efficiency: f64,
}

impl EchoRecord {
    /// Record of a pipeline that evolves the transverse profile directly,
    /// without a temporal output trace.
    pub fn from_transverse(input: &TransverseField, output: TransverseField) -> Result<Self> {
        let p_in = total_power(input);
        if p_in <= 0.0 {
            return Err(Error::ZeroPower);
        }
        let total = total_power(&output) / p_in;
        let overlap = mode_overlap(input, &output)?.norm_sqr() / (p_in * p_in);
        let rec = Self {
            input: PulseEnvelope::new(Vec::new(), 1.0)?,
            input_transverse: Some(input.clone()),
            output: TimeSeries::default(),
            output_power: Vec::new(),
            output_transverse: Some(output),
            recall_window: (0.0, 0.0),
            input_energy: p_in,
            transmitted_energy: 0.0,
            echo_energy: total * p_in,
            total_efficiency: total,
            overlap_efficiency: overlap.min(total),
        };
        rec.flag_overshoot();
        Ok(rec)
    }

    /// Time of the output power maximum inside the recall window.
    pub fn echo_peak_time(&self) -> Option<f64> {
        let (a, b) = self.recall_window;
        self.output
            .times
            .iter()
            .zip(&self.output_power)
            .filter(|(t, _)| **t >= a && **t <= b)
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(t, _)| *t)
    }

    pub(crate) fn flag_overshoot(&self) {
        if self.total_efficiency > 1.0 + EFFICIENCY_SLACK {
            log::warn!(
                "total efficiency {:.4} exceeds unity beyond the {EFFICIENCY_SLACK} tolerance",
                self.total_efficiency
            );
        }
    }
}

/// `(P_out / P_in, |<ref|out>|^2 / (P_ref P_in))` for a record with a
/// transverse output.
pub fn recall_efficiencies(record: &EchoRecord, reference: &TransverseField) -> Result<(f64, f64)> {
    let out = record
        .output_transverse
        .as_ref()
        .ok_or(Error::MissingTransverse)?;
    let p_ref = total_power(reference);
    if p_ref <= 0.0 {
        return Err(Error::ZeroPower);
    }
    let p_in = record
        .input_transverse
        .as_ref()
        .map(total_power)
        .unwrap_or(1.0);
    let total = total_power(out) / p_in;
    // Bounded by the total in exact arithmetic; the cap removes rounding.
    let overlap = (mode_overlap(reference, out)?.norm_sqr() / (p_ref * p_in)).min(total);
    Ok((total, overlap))
}
