//! Post-processing of scenario outputs: decay fits, spectral transfer, and
//! signal comparisons.

use gem_core::grid::spectrum;
use gem_core::scattering::Side;
use gem_core::{Error as CoreError, TransverseField};

use crate::error::{HarnessError, Result};

pub use gem_core::modes::smooth_three_point;

/// Least-squares fit of `ln y = ln A - t / tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFit {
    pub amplitude: f64,
    pub tau: f64,
    /// `ln y - ln fit` at each input point.
    pub residuals: Vec<f64>,
    pub residual_rms: f64,
    /// Quadratic coefficient of the residuals against time, scaled to the
    /// log-change it produces across half the time span.
    pub curvature: f64,
    /// Residual RMS after the quadratic trend is removed.
    pub scatter: f64,
}

impl ExpFit {
    /// Residuals follow a systematic bend rather than scatter, i.e. the data
    /// are not a single exponential.
    pub fn is_curved(&self) -> bool {
        self.curvature.abs() > 1e-9 && self.curvature.abs() > 10.0 * self.scatter
    }

    pub fn predict(&self, t: f64) -> f64 {
        self.amplitude * (-t / self.tau).exp()
    }
}

/// Fit `A exp(-t / tau)` to `(t, y)` points by linear regression of `ln y`.
pub fn fit_exponential_decay(series: &[(f64, f64)]) -> Result<ExpFit> {
    if series.len() < 3 {
        return Err(HarnessError::Config(format!(
            "exponential fit needs at least 3 points, got {}",
            series.len()
        )));
    }
    if let Some(&(t, y)) = series.iter().find(|(_, y)| !(*y > 0.0)) {
        return Err(HarnessError::Core(CoreError::DegenerateFit(format!(
            "non-positive value {y} at t = {t}"
        ))));
    }
    let t: Vec<f64> = series.iter().map(|p| p.0).collect();
    let ly: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let [c0, c1] = polyfit::<2>(&t, &ly)?;
    if !(c1 < 0.0) {
        return Err(HarnessError::Core(CoreError::DegenerateFit(format!(
            "series does not decay (log slope {c1:e})"
        ))));
    }
    let residuals: Vec<f64> = t
        .iter()
        .zip(&ly)
        .map(|(&ti, &l)| l - (c0 + c1 * ti))
        .collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();

    let (curvature, scatter) = if series.len() >= 4 {
        let [q0, q1, q2] = polyfit::<3>(&t, &residuals)?;
        let span = t[t.len() - 1] - t[0];
        let rest = t
            .iter()
            .zip(&residuals)
            .map(|(&ti, &r)| (r - (q0 + q1 * ti + q2 * ti * ti)).powi(2))
            .sum::<f64>()
            / t.len() as f64;
        (q2 * span * span / 4.0, rest.sqrt())
    } else {
        (0.0, rms)
    };
    Ok(ExpFit {
        amplitude: c0.exp(),
        tau: -1.0 / c1,
        residuals,
        residual_rms: rms,
        curvature,
        scatter,
    })
}

/// Least-squares polynomial coefficients (lowest order first), with the
/// abscissa centred for conditioning.
fn polyfit<const N: usize>(x: &[f64], y: &[f64]) -> Result<[f64; N]> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let scale = x.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(HarnessError::Core(CoreError::DegenerateFit(
            "all abscissae are equal".into(),
        )));
    }
    let mut a = nalgebra::DMatrix::<f64>::zeros(x.len(), N);
    for (i, &xi) in x.iter().enumerate() {
        let u = (xi - mean) / scale;
        for k in 0..N {
            a[(i, k)] = u.powi(k as i32);
        }
    }
    let b = nalgebra::DVector::from_column_slice(y);
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| HarnessError::Core(CoreError::DegenerateFit(e.to_string())))?;
    // Expand the centred, scaled polynomial back to powers of x.
    let mut out = [0.0; N];
    for (k, &c) in sol.iter().enumerate() {
        let ck = c / scale.powi(k as i32);
        // (x - mean)^k = sum_j binom(k, j) x^j (-mean)^(k-j)
        let mut binom = 1.0;
        for j in 0..=k {
            out[j] += ck * binom * (-mean).powi((k - j) as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    Ok(out)
}

/// Comparison of a field's spectrum before and after storage with the
/// diffusion transfer function `exp(-D k^2 t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCheck {
    pub max_relative_error: f64,
    pub bins: usize,
}

/// Check that `output` is `input` low-pass filtered by diffusion over bins
/// with `|k|` up to `k_fraction` of the Nyquist wavenumber. The DC gain is
/// divided out, so homogeneous scaling does not count as an error. Bins whose
/// expected output amplitude is below `floor` of the input peak are skipped.
pub fn spectral_transfer(
    input: &TransverseField,
    output: &TransverseField,
    d: f64,
    t: f64,
    k_fraction: f64,
    floor: f64,
) -> Result<TransferCheck> {
    let g = input.grid();
    if !g.same_as(output.grid()) {
        return Err(HarnessError::Core(CoreError::GridMismatch(
            "transfer check".into(),
        )));
    }
    let (a, b) = (spectrum(input), spectrum(output));
    if a[0].norm() == 0.0 {
        return Err(HarnessError::Core(CoreError::ZeroPower));
    }
    let dc = b[0] / a[0];
    let peak = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let (kx, ky) = (g.kx(), g.ky());
    let kmax = k_fraction * std::f64::consts::PI / g.dx().max(g.dy());
    let mut worst = 0.0f64;
    let mut bins = 0;
    for (iy, &qy) in ky.iter().enumerate() {
        for (ix, &qx) in kx.iter().enumerate() {
            let k2 = qx * qx + qy * qy;
            if k2.sqrt() > kmax {
                continue;
            }
            let i = g.index(ix, iy);
            let want = (-d * k2 * t).exp();
            if a[i].norm() * want < floor * peak {
                continue;
            }
            let got = b[i] / (a[i] * dc);
            worst = worst.max((got.norm() - want).abs() / want);
            bins += 1;
        }
    }
    Ok(TransferCheck {
        max_relative_error: worst,
        bins,
    })
}

/// Fraction of the field's power on `side` of the grid.
pub fn power_fraction(field: &TransverseField, side: Side) -> f64 {
    let g = field.grid();
    let mut inside = 0.0;
    let mut total = 0.0;
    for iy in 0..g.ny() {
        for ix in 0..g.nx() {
            let p = field.at(ix, iy).norm_sqr();
            total += p;
            if side.contains(g.x(ix), g.y(iy)) {
                inside += p;
            }
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

/// Largest normalized cross-correlation of two equally sampled signals over
/// all relative shifts.
pub fn max_cross_correlation(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let (n, m) = (a.len() as isize, b.len() as isize);
    let mut best = 0.0f64;
    for lag in -(m - 1)..n {
        let mut s = 0.0;
        for j in 0..m {
            let i = j + lag;
            if (0..n).contains(&i) {
                s += a[i as usize] * b[j as usize];
            }
        }
        best = best.max(s);
    }
    best / (na * nb)
}
