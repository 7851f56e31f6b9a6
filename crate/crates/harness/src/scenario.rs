//! Scenario pipelines.
//!
//! The factorized pipeline treats the transverse profile and the longitudinal
//! recall separately: the input profile is burned by the control during the
//! write, evolved through storage by diffusion (and the control, when it stays
//! on), burned again during the read and gated by the control mask. The
//! result is scaled by a longitudinal efficiency that combines one recall of
//! the longitudinal solver with ground-state dephasing and longitudinal
//! diffusion over the storage time.

use std::path::Path;

use gem_core::modes::{
    fit_gaussian_2d, hermite_gauss, intensity_moments, load_image_mask, tem20_peak_ratio,
};
use gem_core::pgm::read_pgm;
use gem_core::scattering::{
    apply_scattering_burn, masked_control_map, recall_gate, scattering_rate_map, storage_evolution,
    ControlMask,
};
use gem_core::solver::{
    recall_efficiencies, simulate_echo_1d, simulate_echo_3d, ControlProfile, EchoRecord,
    GradientSchedule, PulseEnvelope, Segment, Solver3dConfig, SolverConfig,
};
use gem_core::transport::longitudinal_decay_factor;
use gem_core::{MemoryParams, TransverseField, TransverseGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{fit_exponential_decay, power_fraction};
use crate::config::{InputSpec, Longitudinal, MaskSpec, Pipeline, ScenarioConfig, ScenarioId};
use crate::error::{HarnessError, Result};

/// One storage time of one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub storage_time_us: u32,
    pub total_efficiency: f64,
    pub overlap_efficiency: f64,
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub sigma2: f64,
    /// Mean variance of a fitted 2D Gaussian; NaN when the fit fails.
    pub fit_sigma2: f64,
    /// NaN unless the scenario tracks the TEM-20 peak ratio.
    pub peak_ratio: f64,
    /// Recalled power on the dark side of a half-plane control; NaN otherwise.
    pub dark_fraction: f64,
    /// Exponential decay constant fitted to the whole series.
    pub tau_fit: f64,
    /// Intensity that maps to full scale in the rendered echo image.
    pub image_norm: f64,
}

/// All storage times of one input profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub input: TransverseField,
    pub outputs: Vec<TransverseField>,
    pub rows: Vec<Row>,
    /// Peak ratio of the input profile, for TEM-20 runs.
    pub input_peak_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario: ScenarioId,
    /// Recall efficiency without storage losses, from the longitudinal model.
    pub base_efficiency: f64,
    pub series: Vec<Series>,
}

impl ScenarioResult {
    pub fn rows(&self) -> impl Iterator<Item = (&Series, &Row)> {
        self.series
            .iter()
            .flat_map(|s| s.rows.iter().map(move |r| (s, r)))
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let grid = TransverseGrid::square(cfg.grid_n, cfg.grid_extent)?;
    let inputs = build_inputs(cfg, &grid)?;
    let mask = control_mask(&cfg.control.mask, &grid)?;
    let base = match cfg.pipeline {
        Pipeline::Factorized => base_efficiency(cfg)?,
        Pipeline::Full3d => f64::NAN,
    };
    log::info!("{}: base recall efficiency {base:.4}", cfg.scenario);

    let mut series = Vec::with_capacity(inputs.len());
    for (label, input) in inputs {
        let outputs = match cfg.pipeline {
            Pipeline::Factorized => factorized(cfg, &grid, &input, &mask, base)?,
            Pipeline::Full3d => full_3d(cfg, &input, &mask)?,
        };
        series.push(analyse(cfg, label, input, outputs, &mask)?);
    }
    if cfg.noise > 0.0 {
        add_noise(cfg, &mut series);
    }
    for s in &mut series {
        fit_series(s);
    }
    Ok(ScenarioResult {
        scenario: cfg.scenario,
        base_efficiency: base,
        series,
    })
}

fn build_inputs(
    cfg: &ScenarioConfig,
    grid: &TransverseGrid,
) -> Result<Vec<(String, TransverseField)>> {
    match &cfg.input {
        InputSpec::Modes(modes) => modes
            .iter()
            .map(|&m| {
                Ok((
                    m.to_string(),
                    hermite_gauss(m, cfg.params.probe_waist, grid)?,
                ))
            })
            .collect(),
        InputSpec::Image {
            path,
            carrier_waist,
        } => {
            let img = read_image(path)?;
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("image")
                .to_string();
            Ok(vec![(name, load_image_mask(&img, *carrier_waist, grid)?)])
        }
    }
}

fn read_image(path: &Path) -> Result<gem_core::pgm::GrayImage> {
    read_pgm(path).map_err(|e| match e {
        gem_core::Error::Io(io) => HarnessError::io(path, io),
        other => HarnessError::Core(other),
    })
}

fn control_mask(spec: &MaskSpec, grid: &TransverseGrid) -> Result<ControlMask> {
    Ok(match spec {
        MaskSpec::Full => ControlMask::Full,
        MaskSpec::Half(side) => ControlMask::HalfPlane(*side),
        MaskSpec::Image(path) => {
            let img = read_image(path)?;
            ControlMask::Raster(gem_core::modes::image_transmission(&img, grid))
        }
    })
}

/// Echo timeline used for the longitudinal solver and the 3D pipeline.
struct Timeline {
    center: f64,
    write_end: f64,
}

impl Timeline {
    fn new(fwhm: f64) -> Self {
        let sigma = gem_core::solver::intensity_sigma(fwhm);
        let center = 4.0 * sigma + 0.2 * fwhm;
        Self {
            center,
            write_end: center + 5.0 * sigma,
        }
    }

    /// Echo expected after a storage of `hold` seconds following the write.
    fn echo_time(&self, hold: f64) -> f64 {
        let flip = self.write_end + hold;
        flip + (flip - self.center)
    }
}

/// Recall efficiency for zero storage time.
pub fn base_efficiency(cfg: &ScenarioConfig) -> Result<f64> {
    let p = &cfg.params;
    match cfg.longitudinal {
        Longitudinal::ClosedForm => Ok(MemoryParams::broadband_efficiency(p.raman_depth())),
        Longitudinal::Solver { nz } => {
            let tl = Timeline::new(cfg.pulse_fwhm);
            let input = PulseEnvelope::gaussian(cfg.pulse_fwhm, tl.center, cfg.pulse_fwhm / 200.0)?;
            let t_final = tl.echo_time(0.0) + 5.0 * cfg.pulse_fwhm;
            let sched = GradientSchedule::standard_echo(p.eta, tl.write_end, t_final)?;
            let solver = SolverConfig {
                nz,
                ..SolverConfig::default()
            };
            let (rec, _) = simulate_echo_1d(p, &input, &sched, &solver)?;
            Ok(rec.total_efficiency)
        }
    }
}

/// Efficiency factor accumulated over `t` seconds of dark storage.
pub fn storage_factor(p: &MemoryParams, t: f64) -> f64 {
    let fl = longitudinal_decay_factor(p.diffusion, p.eta, t);
    (-2.0 * (p.gamma0 + p.gamma_c) * t).exp() * fl * fl
}

/// Diffusion/burn split steps for a storage of `t` seconds: as many as keep
/// each step's diffusion kernel resolved, capped at `max_steps`.
fn storage_steps(d: f64, t: f64, dx: f64, max_steps: usize) -> usize {
    if d <= 0.0 {
        return max_steps;
    }
    let fit = (d * t / (2.0 * dx * dx)).floor() as usize;
    fit.clamp(1, max_steps)
}

fn factorized(
    cfg: &ScenarioConfig,
    grid: &TransverseGrid,
    input: &TransverseField,
    mask: &ControlMask,
    base: f64,
) -> Result<Vec<TransverseField>> {
    let p = &cfg.params;
    let map = scattering_rate_map(p, grid, cfg.control.offset, cfg.control.rate_form)?;
    let read_map = masked_control_map(&map, mask)?;
    let rw = cfg.control.rw_exposure;
    let written = apply_scattering_burn(input, &map, rw)?;
    let mut out = Vec::with_capacity(cfg.storage_times_us.len());
    for t in cfg.storage_times() {
        let steps = storage_steps(p.diffusion, t, grid.dx(), cfg.control.max_steps);
        let stored = storage_evolution(&written, &map, p.diffusion, t, cfg.control.on, steps)?;
        let read = apply_scattering_burn(&stored, &read_map, rw)?;
        let gated = match mask {
            ControlMask::Full => read,
            m => recall_gate(&read, m)?,
        };
        let scale = (base * storage_factor(p, t)).sqrt();
        out.push(gated.scaled(Complex64::new(scale, 0.0)));
    }
    Ok(out)
}

fn full_3d(
    cfg: &ScenarioConfig,
    input: &TransverseField,
    mask: &ControlMask,
) -> Result<Vec<TransverseField>> {
    let p = &cfg.params;
    let tl = Timeline::new(cfg.pulse_fwhm);
    let pulse = PulseEnvelope::gaussian(cfg.pulse_fwhm, tl.center, cfg.pulse_fwhm / 200.0)?;
    let nz = match cfg.longitudinal {
        Longitudinal::Solver { nz } => nz,
        Longitudinal::ClosedForm => 32,
    };
    let solver = Solver3dConfig {
        solver: SolverConfig {
            nz,
            ..SolverConfig::default()
        },
        control: ControlProfile::Gaussian {
            waist: p.control_waist,
            center: cfg.control.offset,
        },
        recall_mask: match mask {
            ControlMask::Full => None,
            m => Some(m.clone()),
        },
        diffraction: true,
    };
    let mut out = Vec::new();
    for t in cfg.storage_times() {
        let flip = tl.write_end + t;
        let echo = tl.echo_time(t);
        // Keep the control dark until shortly before the echo so the solver can
        // take long steps through the unlit part of the recall.
        let lit = (echo - 4.0 * cfg.pulse_fwhm).max(flip);
        let t_final = echo + 4.0 * cfg.pulse_fwhm;
        let mut segs = vec![Segment::new(0.0, tl.write_end, p.eta, true)];
        if t > 0.0 {
            segs.push(Segment::new(tl.write_end, flip, p.eta, cfg.control.on));
        }
        if lit > flip {
            segs.push(Segment::new(flip, lit, -p.eta, cfg.control.on));
        }
        segs.push(Segment::new(lit, t_final, -p.eta, true));
        let sched = GradientSchedule::new(segs)?;
        let (rec, _) = simulate_echo_3d(p, input, &pulse, &sched, &solver)?;
        out.push(
            rec.output_transverse
                .ok_or(gem_core::Error::MissingTransverse)?,
        );
    }
    Ok(out)
}

fn analyse(
    cfg: &ScenarioConfig,
    label: String,
    input: TransverseField,
    outputs: Vec<TransverseField>,
    mask: &ControlMask,
) -> Result<Series> {
    let tracks_ratio = cfg.scenario == ScenarioId::Tem20PeakRatio;
    let input_peak_ratio = if tracks_ratio {
        Some(tem20_peak_ratio(&input.intensity())?)
    } else {
        None
    };
    let dark_side = match mask {
        ControlMask::HalfPlane(side) => Some(side.opposite()),
        _ => None,
    };
    let mut rows = Vec::with_capacity(outputs.len());
    for (out, &t_us) in outputs.iter().zip(&cfg.storage_times_us) {
        let rec = EchoRecord::from_transverse(&input, out.clone())?;
        let (total, overlap) = recall_efficiencies(&rec, &input)?;
        let intensity = out.intensity();
        let (sx, sy) = match intensity_moments(out) {
            Ok(s) => (s.var_x, s.var_y),
            Err(gem_core::Error::ZeroPower) => (f64::NAN, f64::NAN),
            Err(e) => return Err(e.into()),
        };
        let fit_sigma2 = fit_gaussian_2d(&intensity)
            .map(|f| f.mean_sigma2())
            .unwrap_or(f64::NAN);
        let peak_ratio = if tracks_ratio {
            tem20_peak_ratio(&intensity)?
        } else {
            f64::NAN
        };
        rows.push(Row {
            storage_time_us: t_us,
            total_efficiency: total,
            overlap_efficiency: overlap,
            sigma_x2: sx,
            sigma_y2: sy,
            sigma2: 0.5 * (sx + sy),
            fit_sigma2,
            peak_ratio,
            dark_fraction: dark_side
                .map(|s| power_fraction(out, s))
                .unwrap_or(f64::NAN),
            tau_fit: f64::NAN,
            image_norm: intensity.max(),
        });
    }
    Ok(Series {
        label,
        input,
        outputs,
        rows,
        input_peak_ratio,
    })
}

/// Multiplicative noise on the efficiencies, for robustness studies. The same
/// factor multiplies total and overlap so their ordering is kept.
fn add_noise(cfg: &ScenarioConfig, series: &mut [Series]) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for s in series {
        for r in &mut s.rows {
            let k = 1.0 + cfg.noise * rng.random_range(-1.0..=1.0);
            r.total_efficiency *= k;
            r.overlap_efficiency *= k;
        }
    }
}

fn fit_series(s: &mut Series) {
    let pts: Vec<(f64, f64)> = s
        .rows
        .iter()
        .map(|r| (f64::from(r.storage_time_us) * 1e-6, r.total_efficiency))
        .collect();
    let tau = fit_exponential_decay(&pts)
        .map(|f| f.tau)
        .unwrap_or(f64::NAN);
    for r in &mut s.rows {
        r.tau_fit = tau;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn steps_keep_kernels_resolved() {
        let dx = 12e-3 / 256.0;
        assert_eq!(storage_steps(13.2e-4, 6e-6, dx, 32), 1);
        let n = storage_steps(13.2e-4, 60e-6, dx, 32);
        assert!(n > 1 && (2.0 * 13.2e-4 * 60e-6 / n as f64).sqrt() >= 2.0 * dx);
        assert_eq!(storage_steps(0.0, 6e-6, dx, 8), 8);
    }

    #[test]
    fn storage_factor_limits() {
        let p = MemoryParams {
            gamma0: 0.0,
            diffusion: 0.0,
            ..MemoryParams::default()
        };
        assert_eq!(storage_factor(&p, 50e-6), 1.0);
        let q = MemoryParams::default();
        assert!(storage_factor(&q, 60e-6) < storage_factor(&q, 30e-6));
    }

    #[test]
    fn factorized_run_is_consistent() {
        let cfg = parse_config(
            "scenario = het_vs_ccd\ngrid.n = 128\nlongitudinal.model = closed_form\nstorage.times_us = 0:20:80\n",
        )
        .unwrap();
        let res = run_scenario(&cfg).unwrap();
        let rows = &res.series[0].rows;
        assert_eq!(rows.len(), 5);
        for w in rows.windows(2) {
            assert!(w[1].total_efficiency < w[0].total_efficiency);
        }
        for r in rows {
            assert!(r.overlap_efficiency <= r.total_efficiency + 1e-9);
            assert!(r.tau_fit > 0.0);
        }
    }

    #[test]
    fn full_3d_pipeline_runs_on_small_grids() {
        let cfg = parse_config(
            "scenario = tem00_decay\npipeline.mode = full3d\ngrid.n = 16\nlongitudinal.nz = 16\nstorage.times_us = 0,2\n",
        )
        .unwrap();
        let res = run_scenario(&cfg).unwrap();
        let rows = &res.series[0].rows;
        assert!(rows[0].total_efficiency > 0.05, "{rows:?}");
        assert!(rows[1].total_efficiency < rows[0].total_efficiency);
    }
}
