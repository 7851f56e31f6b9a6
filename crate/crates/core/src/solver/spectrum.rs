use num_complex::Complex64;

use crate::params::MemoryParams;

/// Absorption (real part) and dispersion (imaginary part) of the Raman
/// susceptibility against two-photon detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanSpectrum {
    pub detuning: Vec<f64>,
    pub absorption: Vec<f64>,
    pub dispersion: Vec<f64>,
}

impl RamanSpectrum {
    /// Full width at half maximum of the absorption, by linear interpolation
    /// between samples.
    pub fn absorption_fwhm(&self) -> Option<f64> {
        let a = &self.absorption;
        let (imax, &peak) = a.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1))?;
        let half = 0.5 * peak;
        let cross = |i: usize, j: usize| {
            let (x0, x1) = (self.detuning[i], self.detuning[j]);
            x0 + (half - a[i]) / (a[j] - a[i]) * (x1 - x0)
        };
        let left = (1..=imax)
            .rev()
            .find(|&i| a[i - 1] < half)
            .map(|i| cross(i - 1, i))?;
        let right = (imax..a.len() - 1)
            .find(|&i| a[i + 1] < half)
            .map(|i| cross(i, i + 1))?;
        Some(right - left)
    }
}

/// Two-photon linewidth `gamma0 + gamma_c + Omega_c^2 gamma / Delta^2`.
pub fn two_photon_linewidth(p: &MemoryParams) -> f64 {
    let scatter = if p.delta != 0.0 {
        p.omega_c * p.omega_c * p.gamma / (p.delta * p.delta)
    } else {
        0.0
    };
    p.gamma0 + p.gamma_c + scatter
}

/// Raman line shape `1 / (i (delta - eta z) + Gamma2)`, either at a single
/// position (`broadened = false`) or averaged over the cell
/// `z in [-L/2, L/2]`.
pub fn raman_absorption_profile(
    p: &MemoryParams,
    detunings: &[f64],
    broadened: bool,
) -> RamanSpectrum {
    let mut g2 = two_photon_linewidth(p);
    let span = p.eta * p.length;
    if g2 <= 0.0 {
        g2 = 1e-9 * span.abs().max(1.0);
    }
    let chi = |d: f64| -> Complex64 {
        if !broadened || span.abs() < 1e-9 * g2 {
            return 1.0 / Complex64::new(g2, d);
        }
        let (u1, u2) = (d - 0.5 * span, d + 0.5 * span);
        let l1 = Complex64::new(g2, u1).ln();
        let l2 = Complex64::new(g2, u2).ln();
        (l2 - l1) / (Complex64::new(0.0, 1.0) * span)
    };
    let values: Vec<Complex64> = detunings.iter().map(|&d| chi(d)).collect();
    RamanSpectrum {
        detuning: detunings.to_vec(),
        absorption: values.iter().map(|v| v.re).collect(),
        dispersion: values.iter().map(|v| v.im).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MemoryParams {
        MemoryParams::default()
    }

    fn grid(span: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Midpoint-rule average over z, independent of the closed form.
    fn quadrature(p: &MemoryParams, d: f64) -> Complex64 {
        let g2 = two_photon_linewidth(p);
        let n = 20000;
        (0..n)
            .map(|k| {
                let z = -0.5 * p.length + (k as f64 + 0.5) * p.length / n as f64;
                1.0 / Complex64::new(g2, d - p.eta * z)
            })
            .sum::<Complex64>()
            / n as f64
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let p = params();
        let ds = grid(2.0 * p.eta * p.length, 41);
        let s = raman_absorption_profile(&p, &ds, true);
        for (i, &d) in ds.iter().enumerate() {
            let q = quadrature(&p, d);
            let scale = 1.0 / (p.eta * p.length);
            assert!((s.absorption[i] - q.re).abs() < 1e-3 * scale, "{d}");
            assert!((s.dispersion[i] - q.im).abs() < 1e-3 * scale, "{d}");
        }
    }

    #[test]
    fn no_gradient_means_no_broadening() {
        let p = MemoryParams {
            eta: 0.0,
            ..params()
        };
        let ds = grid(1e6, 21);
        assert_eq!(
            raman_absorption_profile(&p, &ds, true),
            raman_absorption_profile(&p, &ds, false)
        );
    }

    #[test]
    fn broadened_width_and_symmetry() {
        let p = params();
        let width = p.eta * p.length;
        let ds = grid(width, 4001);
        let s = raman_absorption_profile(&p, &ds, true);
        let fwhm = s.absorption_fwhm().unwrap();
        assert!((fwhm - width).abs() < 0.02 * width, "{fwhm} vs {width}");
        let n = ds.len();
        for i in 0..n {
            assert!(
                (s.absorption[i] - s.absorption[n - 1 - i]).abs() < 1e-12 * s.absorption[n / 2]
            );
            assert!(
                (s.dispersion[i] + s.dispersion[n - 1 - i]).abs() < 1e-12 * s.absorption[n / 2]
            );
        }
        // Dispersion is largest near the edges of the broadened line.
        let (imax, _) = s
            .dispersion
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        assert!((ds[imax].abs() - 0.5 * width).abs() < 0.05 * width);

        let narrow = raman_absorption_profile(&p, &ds, false);
        let nw = narrow.absorption_fwhm().unwrap();
        assert!((nw - 2.0 * two_photon_linewidth(&p)).abs() < 0.05 * nw);
    }
}
