//! Netpbm grayscale (PGM) reading and writing.
//!
//! Reads ASCII (P2) and binary (P5) files with 8- or 16-bit samples. Writes
//! binary 16-bit P5. Row 0 of an image is its top edge, which maps to the
//! largest y on a transverse grid.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::IntensityMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    maxval: u16,
    pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Image("image has no pixels".into()));
        }
        if maxval == 0 {
            return Err(Error::Image("maxval must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Image(format!(
                "expected {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if pixels.iter().any(|&p| p > maxval) {
            return Err(Error::Image("pixel value exceeds maxval".into()));
        }
        Ok(Self {
            width,
            height,
            maxval,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn maxval(&self) -> u16 {
        self.maxval
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    /// Pixel value scaled to `[0, 1]`; `row` 0 is the top.
    pub fn level(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * self.width + col] as f64 / self.maxval as f64
    }

    /// Binary P5 encoding. Samples are big-endian 16-bit when `maxval > 255`.
    pub fn to_p5(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        if self.maxval > 255 {
            for &p in &self.pixels {
                out.extend_from_slice(&p.to_be_bytes());
            }
        } else {
            out.extend(self.pixels.iter().map(|&p| p as u8));
        }
        out
    }
}

struct Header<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Image("unexpected end of PGM header".into()));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .map_err(|_| Error::Image("non-ASCII PGM header".into()))
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.token()?;
        t.parse()
            .map_err(|_| Error::Image(format!("expected a number in PGM header, got `{t}`")))
    }
}

pub fn parse_pgm(data: &[u8]) -> Result<GrayImage> {
    let mut h = Header { data, pos: 0 };
    let magic = h.token()?;
    let binary = match magic {
        "P2" => false,
        "P5" => true,
        other => return Err(Error::Image(format!("not a PGM file (magic `{other}`)"))),
    };
    let width = h.number()?;
    let height = h.number()?;
    let maxval = h.number()?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Image(format!("invalid maxval {maxval}")));
    }
    let count = width * height;
    let pixels = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let start = h.pos + 1;
        let bytes_per = if maxval > 255 { 2 } else { 1 };
        let raster = data
            .get(start..start + count * bytes_per)
            .ok_or_else(|| Error::Image("truncated PGM raster".into()))?;
        if bytes_per == 2 {
            raster
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        } else {
            raster.iter().map(|&b| b as u16).collect()
        }
    } else {
        let mut v = Vec::with_capacity(count);
        for _ in 0..count {
            v.push(h.number()? as u16);
        }
        v
    };
    GrayImage::new(width, height, maxval as u16, pixels)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    parse_pgm(&fs::read(path)?)
}

/// Quantize an intensity map to 16 bits, dividing by `norm` (the map maximum
/// when `None`). Returns the image and the normalization used.
pub fn render_intensity(map: &IntensityMap, norm: Option<f64>) -> (GrayImage, f64) {
    let g = map.grid();
    let norm = norm.unwrap_or_else(|| map.max()).max(f64::MIN_POSITIVE);
    let mut pixels = Vec::with_capacity(g.len());
    for row in 0..g.ny() {
        let iy = g.ny() - 1 - row;
        for ix in 0..g.nx() {
            let v = (map.at(ix, iy) / norm).clamp(0.0, 1.0);
            pixels.push((v * 65535.0).round() as u16);
        }
    }
    let img = GrayImage {
        width: g.nx(),
        height: g.ny(),
        maxval: 65535,
        pixels,
    };
    (img, norm)
}

pub fn write_pgm(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    fs::write(path, image.to_p5())?;
    Ok(())
}
