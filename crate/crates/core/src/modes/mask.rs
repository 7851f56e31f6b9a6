use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{total_power, IntensityMap, TransverseField, TransverseGrid};
use crate::modes::gaussian_beam;
use crate::pgm::GrayImage;

/// Intensity transmission of `image` resampled onto `grid`.
///
/// The image is stretched over the full grid extent and sampled bilinearly at
/// each grid point; pixel levels are divided by the image maxval.
pub fn image_transmission(image: &GrayImage, grid: &TransverseGrid) -> IntensityMap {
    let (w, h) = (image.width(), image.height());
    let (ex, ey) = (grid.extent_x(), grid.extent_y());
    let sample = |px: f64, py: f64| -> f64 {
        let px = px.clamp(0.0, (w - 1) as f64);
        let py = py.clamp(0.0, (h - 1) as f64);
        let (c0, r0) = (px.floor() as usize, py.floor() as usize);
        let (c1, r1) = ((c0 + 1).min(w - 1), (r0 + 1).min(h - 1));
        let (a, b) = (px - c0 as f64, py - r0 as f64);
        let top = (1.0 - a) * image.level(c0, r0) + a * image.level(c1, r0);
        let bottom = (1.0 - a) * image.level(c0, r1) + a * image.level(c1, r1);
        (1.0 - b) * top + b * bottom
    };
    IntensityMap::from_fn(*grid, |x, y| {
        let px = (x / ex + 0.5) * w as f64 - 0.5;
        let py = (0.5 - y / ey) * h as f64 - 0.5;
        sample(px, py)
    })
}

/// Multiply a field by the square root of an intensity transmission map.
pub fn apply_transmission_mask(
    field: &TransverseField,
    transmission: &IntensityMap,
) -> Result<TransverseField> {
    field.grid().ensure_same(transmission.grid())?;
    let values = field
        .values()
        .iter()
        .zip(transmission.values())
        .map(|(e, &t)| e * Complex64::new(t.max(0.0).sqrt(), 0.0))
        .collect();
    TransverseField::new(*field.grid(), values)
}

/// Probe shaped by a transparency: `sqrt(T) x` a centred Gaussian carrier,
/// normalized to unit power.
pub fn load_image_mask(
    image: &GrayImage,
    carrier_waist: f64,
    grid: &TransverseGrid,
) -> Result<TransverseField> {
    let carrier = gaussian_beam(carrier_waist, (0.0, 0.0), grid)?;
    let t = image_transmission(image, grid);
    let shaped = apply_transmission_mask(&carrier, &t)?;
    if total_power(&shaped) <= 0.0 {
        return Err(Error::EmptyMask);
    }
    shaped.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TransverseGrid {
        TransverseGrid::square(64, 8e-3).unwrap()
    }

    #[test]
    fn white_mask_is_carrier() {
        let img = GrayImage::new(5, 7, 255, vec![255; 35]).unwrap();
        let f = load_image_mask(&img, 1e-3, &grid()).unwrap();
        let c = gaussian_beam(1e-3, (0.0, 0.0), &grid()).unwrap();
        let err = f
            .values()
            .iter()
            .zip(c.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6);
    }

    #[test]
    fn half_plane_passes_half_the_power() {
        for w in [64usize, 10] {
            let px: Vec<u16> = (0..w * w)
                .map(|i| if i % w < w / 2 { 0 } else { 65535 })
                .collect();
            let img = GrayImage::new(w, w, 65535, px).unwrap();
            let carrier = gaussian_beam(1e-3, (0.0, 0.0), &grid()).unwrap();
            let shaped =
                apply_transmission_mask(&carrier, &image_transmission(&img, &grid())).unwrap();
            assert!((total_power(&shaped) - 0.5).abs() < 1e-9, "width {w}");
        }
    }

    #[test]
    fn black_mask_is_rejected() {
        let img = GrayImage::new(4, 4, 255, vec![0; 16]).unwrap();
        assert!(matches!(
            load_image_mask(&img, 1e-3, &grid()),
            Err(Error::EmptyMask)
        ));
    }
}
