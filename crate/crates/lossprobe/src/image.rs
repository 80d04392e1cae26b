//! Raster types and portable graymap (PGM, P5) serialization.

use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

/// Input accepted by the snapshot capture: the simulator renders grayscale
/// directly, a real-device adapter would hand over RGB screenshots.
#[derive(Debug, Clone)]
pub enum Raster {
    Gray(GrayImage),
    Rgb(RgbImage),
}

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("not a P5 portable graymap: {0}")]
    Format(String),
}

impl GrayImage {
    pub fn new(width: u32, height: u32, fill: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![fill; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        if x < self.width && y < self.height {
            self.pixels[y as usize * self.width as usize + x as usize] = value;
        }
    }

    /// Fills the rectangle clipped to the image bounds.
    pub fn fill_rect(&mut self, x: i64, y: i64, w: u32, h: u32, value: u8) {
        let x0 = x.max(0) as u32;
        let y0 = y.max(0) as u32;
        let x1 = ((x + i64::from(w)).max(0) as u64).min(u64::from(self.width)) as u32;
        let y1 = ((y + i64::from(h)).max(0) as u64).min(u64::from(self.height)) as u32;
        for yy in y0..y1 {
            let row = yy as usize * self.width as usize;
            self.pixels[row + x0 as usize..row + x1 as usize].fill(value);
        }
    }

    /// Writes the raster as a binary PGM (P5, maxval 255).
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<(), PgmError> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn save_pgm(&self, path: &Path) -> Result<(), PgmError> {
        let mut file = std::fs::File::create(path)?;
        self.write_pgm(&mut file)
    }

    /// Reads a binary PGM (P5, maxval 255) raster.
    pub fn read_pgm<R: Read>(mut input: R) -> Result<Self, PgmError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::from_pgm_bytes(&bytes)
    }

    pub fn load_pgm(path: &Path) -> Result<Self, PgmError> {
        let bytes = std::fs::read(path)?;
        Self::from_pgm_bytes(&bytes)
    }

    fn from_pgm_bytes(bytes: &[u8]) -> Result<Self, PgmError> {
        let mut pos = 0usize;
        let mut token = |bytes: &[u8]| -> Result<String, PgmError> {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(PgmError::Format("truncated header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };

        let magic = token(bytes)?;
        if magic != "P5" {
            return Err(PgmError::Format(format!("magic {magic:?}")));
        }
        let width: u32 = token(bytes)?
            .parse()
            .map_err(|_| PgmError::Format("bad width".into()))?;
        let height: u32 = token(bytes)?
            .parse()
            .map_err(|_| PgmError::Format("bad height".into()))?;
        let maxval: u32 = token(bytes)?
            .parse()
            .map_err(|_| PgmError::Format("bad maxval".into()))?;
        if maxval != 255 {
            return Err(PgmError::Format(format!("maxval {maxval}, expected 255")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let need = width as usize * height as usize;
        if bytes.len() < pos + need {
            return Err(PgmError::Format("truncated raster".into()));
        }
        Ok(Self {
            width,
            height,
            pixels: bytes[pos..pos + need].to_vec(),
        })
    }
}

impl RgbImage {
    pub fn new(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            pixels.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let idx = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[idx..idx + 3].copy_from_slice(&rgb);
    }
}

impl From<GrayImage> for Raster {
    fn from(img: GrayImage) -> Self {
        Raster::Gray(img)
    }
}

impl From<RgbImage> for Raster {
    fn from(img: RgbImage) -> Self {
        Raster::Rgb(img)
    }
}

impl Raster {
    pub fn dimensions(&self) -> (u32, u32) {
        match self {
            Raster::Gray(g) => (g.width, g.height),
            Raster::Rgb(c) => (c.width, c.height),
        }
    }

    /// Converts to grayscale using ITU-R BT.601 luma weights,
    /// rounded to the nearest integer.
    pub fn to_gray(&self) -> GrayImage {
        match self {
            Raster::Gray(g) => g.clone(),
            Raster::Rgb(c) => {
                let mut pixels = Vec::with_capacity(c.width as usize * c.height as usize);
                for px in c.pixels.chunks_exact(3) {
                    let luma = 0.299 * f64::from(px[0])
                        + 0.587 * f64::from(px[1])
                        + 0.114 * f64::from(px[2]);
                    pixels.push(luma.round() as u8);
                }
                GrayImage {
                    width: c.width,
                    height: c.height,
                    pixels,
                }
            }
        }
    }
}
