//! Atomic diffusion of the stored coherence.
//!
//! The propagator acts on the field amplitude with width `sigma^2 = 2 D t`,
//! which makes the intensity variance of a Gaussian grow by exactly `D t`.
//! Convolution is linear (not circular): the field is zero-padded to twice
//! its extent per axis before the spectral product and cropped afterwards.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Fft2, TransverseField, TransverseGrid};
use crate::units::BOLTZMANN;

/// Gaussian diffusion propagator sampled on a zero-padded copy of a grid.
#[derive(Debug, Clone)]
pub struct DiffusionKernel {
    grid: TransverseGrid,
    t: f64,
    d: f64,
    sigma: f64,
    // Direct-space kernel and its transform on the (2 nx) x (2 ny) padded
    // grid, in FFT order. Empty for the identity kernel.
    direct: Vec<f64>,
    spectrum: Vec<f64>,
    fft: Option<Fft2>,
}

/// Build the propagator for diffusion coefficient `d` (m^2/s) over `t` seconds.
///
/// Fails when the kernel width is under two samples or over one eighth of the
/// grid extent. `t = 0` or `d = 0` gives the identity.
pub fn diffusion_kernel(d: f64, t: f64, grid: &TransverseGrid) -> Result<DiffusionKernel> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "diffusion coefficient must be >= 0, got {d}"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "diffusion time must be >= 0, got {t}"
        )));
    }
    let sigma = (2.0 * d * t).sqrt();
    let mut k = DiffusionKernel {
        grid: *grid,
        t,
        d,
        sigma,
        direct: Vec::new(),
        spectrum: Vec::new(),
        fft: None,
    };
    if sigma == 0.0 {
        return Ok(k);
    }
    let min = 2.0 * grid.dx().max(grid.dy());
    if sigma < min {
        return Err(Error::KernelUnderResolved { sigma, min });
    }
    let max = grid.extent_x().min(grid.extent_y()) / 8.0;
    if sigma > max {
        return Err(Error::KernelOverExtended { sigma, max });
    }

    let (px, py) = (2 * grid.nx(), 2 * grid.ny());
    let offset = |j: usize, n: usize| {
        if j < n / 2 {
            j as f64
        } else {
            j as f64 - n as f64
        }
    };
    let s2 = 2.0 * sigma * sigma;
    let mut direct = Vec::with_capacity(px * py);
    for jy in 0..py {
        let y = offset(jy, py) * grid.dy();
        for jx in 0..px {
            let x = offset(jx, px) * grid.dx();
            direct.push((-(x * x + y * y) / s2).exp());
        }
    }
    let norm = direct.iter().sum::<f64>() * grid.cell_area();
    for v in &mut direct {
        *v /= norm;
    }
    let fft = Fft2::new(px, py);
    let mut buf: Vec<Complex64> = direct
        .iter()
        .map(|&v| Complex64::new(v * grid.cell_area(), 0.0))
        .collect();
    fft.forward(&mut buf);
    k.spectrum = buf.iter().map(|c| c.re).collect();
    k.direct = direct;
    k.fft = Some(fft);
    Ok(k)
}

impl DiffusionKernel {
    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn coefficient(&self) -> f64 {
        self.d
    }

    /// Kernel width `sqrt(2 D t)`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_identity(&self) -> bool {
        self.fft.is_none()
    }

    /// Padded sample counts `(2 nx, 2 ny)`.
    pub fn padded_dims(&self) -> (usize, usize) {
        (2 * self.grid.nx(), 2 * self.grid.ny())
    }

    /// Normalized direct-space kernel on the padded grid, FFT order (origin at
    /// index 0). Empty for the identity kernel.
    pub fn direct(&self) -> &[f64] {
        &self.direct
    }

    /// Transfer function on the padded grid, FFT order. Empty for the
    /// identity kernel.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Linear convolution of a field with the kernel.
    pub fn apply(&self, field: &TransverseField) -> Result<TransverseField> {
        self.grid.ensure_same(field.grid())?;
        let Some(fft) = &self.fft else {
            return Ok(field.clone());
        };
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let px = 2 * nx;
        let mut buf = vec![Complex64::new(0.0, 0.0); px * 2 * ny];
        for iy in 0..ny {
            buf[iy * px..iy * px + nx].copy_from_slice(&field.values()[iy * nx..(iy + 1) * nx]);
        }
        fft.forward(&mut buf);
        for (b, &s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        fft.inverse(&mut buf);
        let mut out = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            out.extend_from_slice(&buf[iy * px..iy * px + nx]);
        }
        TransverseField::new(self.grid, out)
    }
}

/// Diffuse a coherence (or the field mapped from it) for time `t`.
pub fn apply_diffusion(field: &TransverseField, d: f64, t: f64) -> Result<TransverseField> {
    diffusion_kernel(d, t, field.grid())?.apply(field)
}

/// Fraction of TEM00 power left after diffusion, `W0^2 / (4 D t + W0^2)`.
pub fn power_retention_tem00(w0: f64, d: f64, t: f64) -> f64 {
    w0 * w0 / (4.0 * d * t + w0 * w0)
}

/// Straight-line fit of beam variance against storage time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionFit {
    /// Slope of sigma^2 against t, m^2/s.
    pub d: f64,
    /// sigma^2 at t = 0, m^2.
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub residual_rms: f64,
    pub points: usize,
}

/// Ordinary least-squares slope of `(t, sigma^2)` pairs.
pub fn infer_diffusion_coefficient(series: &[(f64, f64)]) -> Result<DiffusionFit> {
    let n = series.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 points, got {n}"
        )));
    }
    if series.iter().any(|(t, s)| !t.is_finite() || !s.is_finite()) {
        return Err(Error::InvalidParameter(
            "series contains non-finite values".into(),
        ));
    }
    let nf = n as f64;
    let tm = series.iter().map(|p| p.0).sum::<f64>() / nf;
    let sm = series.iter().map(|p| p.1).sum::<f64>() / nf;
    let stt: f64 = series.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if stt <= f64::EPSILON * series.iter().map(|p| p.0 * p.0).sum::<f64>() || stt == 0.0 {
        return Err(Error::DegenerateFit("all sample times are equal".into()));
    }
    let sts: f64 = series.iter().map(|p| (p.0 - tm) * (p.1 - sm)).sum();
    let d = sts / stt;
    let intercept = sm - d * tm;
    let ss_res: f64 = series
        .iter()
        .map(|p| (p.1 - intercept - d * p.0).powi(2))
        .sum();
    let ss_tot: f64 = series.iter().map(|p| (p.1 - sm).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    let slope_stderr = if n > 2 {
        (ss_res / (nf - 2.0) / stt).sqrt()
    } else {
        0.0
    };
    Ok(DiffusionFit {
        d,
        intercept,
        slope_stderr,
        r_squared,
        residual_rms: (ss_res / nf).sqrt(),
        points: n,
    })
}

/// Maxwell-Boltzmann mean speed `sqrt(8 kB T / (pi m))`, m/s.
pub fn mean_thermal_speed(temperature: f64, atomic_mass: f64) -> f64 {
    (8.0 * BOLTZMANN * temperature / (PI * atomic_mass)).sqrt()
}

/// Gas-kinetic diffusion coefficient `v^2 / (3 gamma_coll)`, m^2/s.
pub fn kinetic_diffusion_coefficient(
    temperature: f64,
    atomic_mass: f64,
    collision_rate: f64,
) -> f64 {
    let v = mean_thermal_speed(temperature, atomic_mass);
    v * v / (3.0 * collision_rate)
}

/// Amplitude damping from diffusion along the cell while the gradient winds
/// the spin wave: `exp(-D eta^2 tau^3 / 3)`. Square it for efficiency.
pub fn longitudinal_decay_factor(d: f64, eta: f64, tau: f64) -> f64 {
    (-d * eta * eta * tau.powi(3) / 3.0).exp()
}
