//! Physical parameters of the memory.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::{mhz_to_rad_s, SPEED_OF_LIGHT};

/// Constants and rates of the three-level memory, SI units, rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryParams {
    /// Probe coupling (vacuum Rabi frequency per unit field), rad/s.
    pub g: f64,
    /// Atomic density, m^-3.
    pub density: f64,
    /// One-photon detuning, rad/s.
    pub delta: f64,
    /// On-axis control Rabi frequency, rad/s.
    pub omega_c: f64,
    /// Excited-state decay rate, rad/s.
    pub gamma: f64,
    /// Ground-state dephasing rate, rad/s.
    pub gamma0: f64,
    /// Population exchange rate, rad/s.
    pub gamma_c: f64,
    /// Gradient slope of the two-photon detuning, rad/s per metre.
    pub eta: f64,
    /// Two-photon detuning offset, rad/s.
    pub delta0: f64,
    /// Diffusion coefficient, m^2/s.
    pub diffusion: f64,
    /// Control beam waist, m.
    pub control_waist: f64,
    /// Probe beam waist, m.
    pub probe_waist: f64,
    /// Probe wavenumber, rad/m.
    pub k0: f64,
    /// Cell length, m.
    pub length: f64,
}

impl Default for MemoryParams {
    /// Warm rubidium vapour numbers: 1.5 GHz detuning, 72 MHz control Rabi
    /// frequency (both taken literally as rad/s), 2pi x 5.6 MHz excited-state
    /// decay, 3 mm control and 1.5 mm probe waists, 200 mm cell, 795 nm probe,
    /// D = 13.2 cm^2/s and a 2 MHz broadened line. The coupling is chosen for a
    /// Raman depth of 0.5.
    fn default() -> Self {
        let length = 0.2;
        let mut p = Self {
            g: 0.0,
            density: 1e17,
            delta: 1.5e9,
            omega_c: 72e6,
            gamma: mhz_to_rad_s(5.6),
            gamma0: 1.0e4,
            gamma_c: 0.0,
            eta: mhz_to_rad_s(2.0) / length,
            delta0: 0.0,
            diffusion: 13.2e-4,
            control_waist: 3e-3,
            probe_waist: 1.5e-3,
            k0: TAU / 795e-9,
            length,
        };
        p.set_raman_depth(0.5);
        p
    }
}

impl MemoryParams {
    /// Rejects negative or non-finite values. Returns human-readable warnings
    /// for regime violations that do not prevent a run.
    pub fn validate(&self) -> Result<Vec<String>> {
        let named = [
            ("g", self.g),
            ("density", self.density),
            ("omega_c", self.omega_c),
            ("gamma", self.gamma),
            ("gamma0", self.gamma0),
            ("gamma_c", self.gamma_c),
            ("diffusion", self.diffusion),
            ("control_waist", self.control_waist),
            ("probe_waist", self.probe_waist),
            ("k0", self.k0),
            ("length", self.length),
        ];
        for (name, v) in named {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("delta", self.delta),
            ("eta", self.eta),
            ("delta0", self.delta0),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        if self.length <= 0.0 {
            return Err(Error::InvalidParameter(
                "cell length must be positive".into(),
            ));
        }
        let mut warnings = Vec::new();
        if self.gamma > 0.0 && self.delta.abs() / self.gamma < 10.0 {
            warnings.push(format!(
                "one-photon detuning is not in the Raman regime: |delta|/gamma = {:.2} < 10",
                self.delta.abs() / self.gamma
            ));
        }
        if self.delta == 0.0 {
            warnings.push("one-photon detuning is zero".to_string());
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(warnings)
    }

    /// Decay rate of the optical coherence, `(2 gamma + gamma0 + gamma_c)/2`.
    pub fn optical_decay(&self) -> f64 {
        0.5 * (2.0 * self.gamma + self.gamma0 + self.gamma_c)
    }

    /// `Delta + i * optical_decay`, the denominator that appears when the
    /// optical coherence follows the fields adiabatically.
    pub fn complex_detuning(&self) -> Complex64 {
        Complex64::new(self.delta, self.optical_decay())
    }

    /// Two-photon light shift of the Raman line while the control is on, with
    /// the optical coherence eliminated: the explicit `Omega_c^2/Delta` term plus
    /// the real part of the shift mediated by the excited state.
    pub fn light_shift(&self, omega_c: f64) -> f64 {
        if self.delta == 0.0 {
            return 0.0;
        }
        let dn = self.complex_detuning();
        omega_c * omega_c / self.delta + (omega_c * omega_c / dn).re
    }

    /// Set `delta0` so that the control-on Raman line is centred at zero.
    pub fn compensate_light_shift(&mut self) {
        self.delta0 = self.light_shift(self.omega_c);
    }

    /// Effective Raman coupling product `(g Omega_c / Delta)^2 n / c`, in
    /// 1/(m s).
    pub fn raman_coupling(&self) -> f64 {
        let dn = self.complex_detuning().norm();
        if dn == 0.0 {
            return 0.0;
        }
        let r = self.g * self.omega_c / dn;
        r * r * self.density / SPEED_OF_LIGHT
    }

    /// Dimensionless Raman depth of the broadened line, `raman_coupling/|eta|`.
    pub fn raman_depth(&self) -> f64 {
        if self.eta == 0.0 {
            return f64::INFINITY;
        }
        self.raman_coupling() / self.eta.abs()
    }

    /// Choose `g` so that [`raman_depth`](Self::raman_depth) equals `beta`.
    pub fn set_raman_depth(&mut self, beta: f64) {
        let dn = self.complex_detuning().norm();
        let target = beta * self.eta.abs();
        self.g = (target * SPEED_OF_LIGHT / self.density).sqrt() * dn / self.omega_c;
    }

    /// Forward-recall efficiency of a broadband gradient echo with Raman depth
    /// `beta`: `(1 - exp(-2 pi beta))^2`.
    pub fn broadband_efficiency(beta: f64) -> f64 {
        let a = 1.0 - (-2.0 * PI * beta).exp();
        a * a
    }

    /// Full width of the broadened Raman line, `|eta| L`, rad/s.
    pub fn broadened_width(&self) -> f64 {
        self.eta.abs() * self.length
    }

    /// Rayleigh range of the probe, `k0 W^2 / 2`.
    pub fn rayleigh_range(&self) -> f64 {
        0.5 * self.k0 * self.probe_waist * self.probe_waist
    }
}
