//! Transverse sampling grids and the complex/real containers defined on them.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform 2D sampling grid centred on the optical axis.
///
/// Sample `i` along x sits at `(i + 0.5 - nx/2) * dx`, so with even counts the
/// origin falls exactly between the two central samples and mirrored indices
/// `i` and `nx - 1 - i` have opposite coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseGrid {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
}

impl TransverseGrid {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        if nx < 8 || ny < 8 || !nx.is_multiple_of(2) || !ny.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "sample counts must be even and at least 8, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "sample pitch must be positive, got dx={dx}, dy={dy}"
            )));
        }
        Ok(Self { nx, ny, dx, dy })
    }

    /// Square grid of `n x n` samples covering `extent` metres per side.
    pub fn square(n: usize, extent: f64) -> Result<Self> {
        Self::new(n, n, extent / n as f64, extent / n as f64)
    }

    /// Single-sample grid used to collapse the 3D solver onto the 1+1D case.
    ///
    /// This is the only way to build a grid below the 8x8 minimum.
    pub fn point(dx: f64, dy: f64) -> Self {
        Self {
            nx: 1,
            ny: 1,
            dx,
            dy,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn extent_x(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn extent_y(&self) -> f64 {
        self.ny as f64 * self.dy
    }

    pub fn x(&self, ix: usize) -> f64 {
        (ix as f64 + 0.5 - self.nx as f64 / 2.0) * self.dx
    }

    pub fn y(&self, iy: usize) -> f64 {
        (iy as f64 + 0.5 - self.ny as f64 / 2.0) * self.dy
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|i| self.y(i)).collect()
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Angular wavenumbers of the DFT bins along x, in FFT order.
    pub fn kx(&self) -> Vec<f64> {
        fft_wavenumbers(self.nx, self.dx)
    }

    pub fn ky(&self) -> Vec<f64> {
        fft_wavenumbers(self.ny, self.dy)
    }

    /// True when the grid is at least four waists wide in both directions.
    /// Logs a warning otherwise.
    pub fn check_waist(&self, waist: f64) -> bool {
        let ok = self.extent_x() >= 4.0 * waist && self.extent_y() >= 4.0 * waist;
        if !ok {
            log::warn!(
                "grid extent {:.3e} x {:.3e} m is less than four waists ({:.3e} m)",
                self.extent_x(),
                self.extent_y(),
                waist
            );
        }
        ok
    }

    pub fn same_as(&self, other: &TransverseGrid) -> bool {
        self == other
    }

    pub(crate) fn ensure_same(&self, other: &TransverseGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} @ ({:.3e}, {:.3e}) vs {}x{} @ ({:.3e}, {:.3e})",
                self.nx, self.ny, self.dx, self.dy, other.nx, other.ny, other.dx, other.dy
            )))
        }
    }
}

/// `2*pi*fftfreq(n, d)`.
pub fn fft_wavenumbers(n: usize, d: f64) -> Vec<f64> {
    let scale = 2.0 * PI / (n as f64 * d);
    (0..n)
        .map(|i| {
            let k = if i < n.div_ceil(2) {
                i as f64
            } else {
                i as f64 - n as f64
            };
            k * scale
        })
        .collect()
}

/// Complex field envelope sampled on a [`TransverseGrid`], row-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TransverseField {
    grid: TransverseGrid,
    values: Vec<Complex64>,
}

impl TransverseField {
    pub fn new(grid: TransverseGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} samples, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidParameter(
                "field contains non-finite samples".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TransverseGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: TransverseGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny() {
            let y = grid.y(iy);
            for ix in 0..grid.nx() {
                values.push(f(grid.x(ix), y));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn intensity(&self) -> IntensityMap {
        IntensityMap {
            grid: self.grid,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// Rescale to unit total power.
    pub fn normalized(&self) -> Result<Self> {
        let p = total_power(self);
        if p <= 0.0 {
            return Err(Error::ZeroPower);
        }
        Ok(self.scaled(Complex64::new(1.0 / p.sqrt(), 0.0)))
    }
}

/// Real-valued map (usually an intensity) on a transverse grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    grid: TransverseGrid,
    values: Vec<f64>,
}

impl IntensityMap {
    pub fn new(grid: TransverseGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "map has {} samples, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TransverseGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny() {
            let y = grid.y(iy);
            for ix in 0..grid.nx() {
                values.push(f(grid.x(ix), y));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `sum |E|^2 dx dy`.
pub fn total_power(field: &TransverseField) -> f64 {
    field.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * field.grid.cell_area()
}

/// Row/column 2D FFT on row-major buffers.
#[derive(Clone)]
pub struct Fft2 {
    nx: usize,
    ny: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    /// Inverse transform including the `1/(nx*ny)` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, false);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn run(&self, data: &mut [Complex64], forward: bool) {
        assert_eq!(
            data.len(),
            self.nx * self.ny,
            "buffer does not match FFT plan"
        );
        let (row, col) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        row.process(data);
        let mut t = transpose(data, self.nx, self.ny);
        col.process(&mut t);
        let back = transpose(&t, self.ny, self.nx);
        data.copy_from_slice(&back);
    }
}

fn transpose(data: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for iy in 0..ny {
        for ix in 0..nx {
            out[ix * ny + iy] = data[iy * nx + ix];
        }
    }
    out
}

/// Forward spectrum of a field (unnormalized DFT, FFT bin order).
pub fn spectrum(field: &TransverseField) -> Vec<Complex64> {
    let g = field.grid();
    let mut buf = field.values().to_vec();
    Fft2::new(g.nx(), g.ny()).forward(&mut buf);
    buf
}

/// Power computed from the spectrum; equals [`total_power`] by Parseval.
pub fn spectral_power(field: &TransverseField) -> f64 {
    let g = field.grid();
    let s = spectrum(field);
    s.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_area() / g.len() as f64
}
