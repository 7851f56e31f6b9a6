//! Hermite-Gauss modes, image-shaped probes and intensity analysis.

mod fit;
mod mask;
mod peaks;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{total_power, IntensityMap, TransverseField, TransverseGrid};

pub use fit::{fit_gaussian_2d, GaussianFit};
pub use mask::{apply_transmission_mask, image_transmission, load_image_mask};
pub use peaks::{smooth_three_point, tem20_peak_ratio};

pub const MAX_MODE_ORDER: u32 = 10;

/// Hermite orders `(m, n)` along x and y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    m: u32,
    n: u32,
}

impl ModeIndex {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m > MAX_MODE_ORDER || n > MAX_MODE_ORDER {
            return Err(Error::InvalidParameter(format!(
                "mode orders must be <= {MAX_MODE_ORDER}, got ({m}, {n})"
            )));
        }
        Ok(Self { m, n })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.m + self.n
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TEM{}{}", self.m, self.n)
    }
}

impl FromStr for ModeIndex {
    type Err = Error;

    /// Accepts `"m,n"`, `"TEMmn"`, `"TEM-mn"` or a bare two-digit `"mn"`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidParameter(format!("cannot parse mode index `{s}`"));
        if let Some((a, b)) = t.split_once(',') {
            let m = a.trim().parse().map_err(|_| bad())?;
            let n = b.trim().parse().map_err(|_| bad())?;
            return ModeIndex::new(m, n);
        }
        let digits = t
            .trim_start_matches("TEM")
            .trim_start_matches("tem")
            .trim_start_matches('-');
        let chars: Vec<char> = digits.chars().collect();
        if chars.len() != 2 {
            return Err(bad());
        }
        let m = chars[0].to_digit(10).ok_or_else(bad)?;
        let n = chars[1].to_digit(10).ok_or_else(bad)?;
        ModeIndex::new(m, n)
    }
}

/// Physicists' Hermite polynomial `H_n(u)`.
pub fn hermite(n: u32, u: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * u;
    for k in 1..n {
        let h2 = 2.0 * u * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Hermite-Gauss field `H_m(sqrt2 x/W) H_n(sqrt2 y/W) exp(-(x^2+y^2)/W^2)`,
/// normalized to unit power on the grid.
///
/// With this convention the TEM00 intensity is `exp(-2 r^2/W^2)` and its
/// variance along each axis is `W^2/4`.
pub fn hermite_gauss(idx: ModeIndex, waist: f64, grid: &TransverseGrid) -> Result<TransverseField> {
    if !(waist > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "waist must be positive, got {waist}"
        )));
    }
    let required = 4.0 * waist * ((idx.m.max(idx.n) + 1) as f64).sqrt();
    let extent = grid.extent_x().min(grid.extent_y());
    if extent < required {
        return Err(Error::WaistTooLarge {
            waist,
            extent,
            required,
        });
    }
    let s = std::f64::consts::SQRT_2 / waist;
    let hx: Vec<f64> = grid
        .xs()
        .iter()
        .map(|&x| hermite(idx.m, s * x) * (-(x * x) / (waist * waist)).exp())
        .collect();
    let hy: Vec<f64> = grid
        .ys()
        .iter()
        .map(|&y| hermite(idx.n, s * y) * (-(y * y) / (waist * waist)).exp())
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for &fy in &hy {
        for &fx in &hx {
            values.push(Complex64::new(fx * fy, 0.0));
        }
    }
    TransverseField::new(*grid, values)?.normalized()
}

/// TEM00 of waist `waist` centred at `(x0, y0)`, unit power.
pub fn gaussian_beam(
    waist: f64,
    center: (f64, f64),
    grid: &TransverseGrid,
) -> Result<TransverseField> {
    if !(waist > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "waist must be positive, got {waist}"
        )));
    }
    TransverseField::from_fn(*grid, |x, y| {
        let dx = x - center.0;
        let dy = y - center.1;
        Complex64::new((-(dx * dx + dy * dy) / (waist * waist)).exp(), 0.0)
    })
    .normalized()
}

/// `<a|b> = sum conj(a) b dx dy`.
pub fn mode_overlap(a: &TransverseField, b: &TransverseField) -> Result<Complex64> {
    a.grid().ensure_same(b.grid())?;
    let s: Complex64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(s * a.grid().cell_area())
}

/// `|<a|b>|^2 / (P_a P_b)`, in `[0, 1]`.
pub fn normalized_overlap(a: &TransverseField, b: &TransverseField) -> Result<f64> {
    let o = mode_overlap(a, b)?;
    let pa = total_power(a);
    let pb = total_power(b);
    if pa <= 0.0 || pb <= 0.0 {
        return Err(Error::ZeroPower);
    }
    Ok((o.norm_sqr() / (pa * pb)).min(1.0))
}

/// First and second moments of an intensity distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamStats {
    pub centroid: (f64, f64),
    pub var_x: f64,
    pub var_y: f64,
    pub power: f64,
}

impl BeamStats {
    /// `(var_x + var_y)/2`.
    pub fn mean_var(&self) -> f64 {
        0.5 * (self.var_x + self.var_y)
    }
}

pub fn intensity_moments(field: &TransverseField) -> Result<BeamStats> {
    intensity_map_moments(&field.intensity())
}

pub fn intensity_map_moments(map: &IntensityMap) -> Result<BeamStats> {
    let g = map.grid();
    let xs = g.xs();
    let ys = g.ys();
    let (mut s0, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for iy in 0..g.ny() {
        for ix in 0..g.nx() {
            let w = map.at(ix, iy);
            s0 += w;
            sx += w * xs[ix];
            sy += w * ys[iy];
        }
    }
    if !(s0 > 0.0) {
        return Err(Error::ZeroPower);
    }
    let cx = sx / s0;
    let cy = sy / s0;
    let (mut vx, mut vy) = (0.0, 0.0);
    for iy in 0..g.ny() {
        let dy = ys[iy] - cy;
        for ix in 0..g.nx() {
            let w = map.at(ix, iy);
            let dx = xs[ix] - cx;
            vx += w * dx * dx;
            vy += w * dy * dy;
        }
    }
    Ok(BeamStats {
        centroid: (cx, cy),
        var_x: vx / s0,
        var_y: vy / s0,
        power: s0 * g.cell_area(),
    })
}
