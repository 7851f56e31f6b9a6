use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex temporal envelope sampled every `dt` from `t = 0`; zero outside
/// the sampled window and linearly interpolated inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope {
    samples: Vec<Complex64>,
    dt: f64,
}

impl PulseEnvelope {
    pub fn new(samples: Vec<Complex64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pulse dt must be positive, got {dt}"
            )));
        }
        if samples
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidParameter(
                "pulse contains non-finite samples".into(),
            ));
        }
        Ok(Self { samples, dt })
    }

    /// Gaussian with intensity full width at half maximum `fwhm`, centred at
    /// `center`, peak amplitude 1 and truncated at four intensity standard
    /// deviations.
    pub fn gaussian(fwhm: f64, center: f64, dt: f64) -> Result<Self> {
        if !(fwhm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pulse FWHM must be positive, got {fwhm}"
            )));
        }
        let sigma = intensity_sigma(fwhm);
        if center < 4.0 * sigma {
            return Err(Error::InvalidParameter(
                "pulse centre must leave room for the leading four-sigma tail".into(),
            ));
        }
        let n = ((center + 4.0 * sigma) / dt).ceil() as usize + 1;
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                let u = t - center;
                if u.abs() > 4.0 * sigma {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new((-u * u / (4.0 * sigma * sigma)).exp(), 0.0)
                }
            })
            .collect();
        Self::new(samples, dt)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 * self.dt
    }

    pub fn value(&self, t: f64) -> Complex64 {
        let x = t / self.dt;
        if x < 0.0 || self.samples.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let i = x.floor() as usize;
        if i + 1 >= self.samples.len() {
            return if i + 1 == self.samples.len() && x == i as f64 {
                self.samples[i]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let a = x - i as f64;
        self.samples[i] * (1.0 - a) + self.samples[i + 1] * a
    }

    /// Span `[first, last]` of non-zero samples, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        let first = self.samples.iter().position(|v| v.norm_sqr() > 0.0)?;
        let last = self.samples.iter().rposition(|v| v.norm_sqr() > 0.0)?;
        // Interpolation reaches one sample beyond each non-zero sample.
        Some((
            (first as f64 - 1.0).max(0.0) * self.dt,
            (last + 1) as f64 * self.dt,
        ))
    }

    /// Trapezoidal `integral |E|^2 dt`.
    pub fn energy(&self) -> f64 {
        trapezoid(self.samples.iter().map(|v| v.norm_sqr()), self.dt)
    }

    /// Scale the envelope by a constant.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * k).collect(),
            dt: self.dt,
        }
    }
}

/// Intensity standard deviation of a Gaussian with intensity FWHM `fwhm`.
pub fn intensity_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

fn trapezoid(v: impl Iterator<Item = f64>, dt: f64) -> f64 {
    let v: Vec<f64> = v.collect();
    if v.len() < 2 {
        return 0.0;
    }
    (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1])) * dt
}

/// Complex samples on a non-uniform, increasing time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, v: Complex64) {
        self.times.push(t);
        self.values.push(v);
    }

    /// Trapezoidal `integral |v|^2 dt` over `[t0, t1]`, using the samples
    /// that fall inside the window.
    pub fn energy_between(&self, t0: f64, t1: f64) -> f64 {
        integrate_between(
            &self.times,
            &self.values.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>(),
            t0,
            t1,
        )
    }

    pub fn energy(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => self.energy_between(a, b),
            _ => 0.0,
        }
    }

    /// Time of the largest `|v|`, if any.
    pub fn peak_time(&self) -> Option<f64> {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map(|(i, _)| self.times[i])
    }

    /// Linear interpolation of `|v|` at `t`; zero outside the sampled range.
    pub fn magnitude_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n == 0 || t < self.times[0] || t > self.times[n - 1] {
            return 0.0;
        }
        let i = self.times.partition_point(|&x| x <= t).min(n - 1).max(1);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let a = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        (1.0 - a) * self.values[i - 1].norm() + a * self.values[i].norm()
    }
}

/// Trapezoidal integral of samples `y(t)` over the samples with `t0 <= t <= t1`.
pub fn integrate_between(times: &[f64], y: &[f64], t0: f64, t1: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        let (a, b) = (times[i - 1], times[i]);
        if a >= t0 && b <= t1 {
            acc += 0.5 * (b - a) * (y[i - 1] + y[i]);
        }
    }
    acc
}
