//! Binary PGM (P5) reading and writing, 8- and 16-bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{io_err, FpmError, Result};

/// Raw PGM contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    pub maxval: u16,
    /// Gray levels, `pixels[[row, col]]`.
    pub pixels: Array2<u16>,
}

impl PgmImage {
    /// Gray levels divided by `maxval`.
    pub fn to_unit(&self) -> Array2<f64> {
        let m = self.maxval as f64;
        self.pixels.mapv(|p| p as f64 / m)
    }

    /// Quantizes values in [0, 1] (clamped) to `maxval` levels.
    pub fn from_unit(values: &Array2<f64>, maxval: u16) -> Self {
        let m = maxval as f64;
        Self {
            maxval,
            pixels: values.mapv(|v| (v.clamp(0.0, 1.0) * m).round() as u16),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let (h, w) = self.pixels.dim();
        let mut out = format!("P5\n{w} {h}\n{}\n", self.maxval).into_bytes();
        if self.maxval < 256 {
            out.extend(self.pixels.iter().map(|&p| p as u8));
        } else {
            for &p in self.pixels.iter() {
                out.extend_from_slice(&p.to_be_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let corrupt = |reason: &str| FpmError::CorruptImage {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        if bytes.len() < 2 || bytes[0] != b'P' {
            return Err(FpmError::UnsupportedFormat {
                path: path.to_path_buf(),
                reason: "not a netpbm file".into(),
            });
        }
        if bytes[1] != b'5' {
            return Err(FpmError::UnsupportedFormat {
                path: path.to_path_buf(),
                reason: format!("magic P{} (only binary P5 is supported)", bytes[1] as char),
            });
        }
        let mut pos = 2;
        let mut fields = [0usize; 3];
        for field in fields.iter_mut() {
            *field = header_number(bytes, &mut pos).ok_or_else(|| corrupt("truncated header"))?;
        }
        let [width, height, maxval] = fields;
        if width == 0 || height == 0 {
            return Err(corrupt("zero image dimension"));
        }
        if maxval == 0 || maxval > 65535 {
            return Err(corrupt("maxval outside 1..=65535"));
        }
        // exactly one whitespace byte separates the header from the raster
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(corrupt("missing raster separator"));
        }
        pos += 1;
        let depth = if maxval < 256 { 1 } else { 2 };
        let raster = &bytes[pos..];
        if raster.len() < width * height * depth {
            return Err(corrupt("raster shorter than header dimensions"));
        }
        let values: Vec<u16> = if depth == 1 {
            raster[..width * height].iter().map(|&b| b as u16).collect()
        } else {
            raster[..width * height * 2]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        };
        if values.iter().any(|&v| v as usize > maxval) {
            return Err(corrupt("sample exceeds maxval"));
        }
        Ok(Self {
            maxval: maxval as u16,
            pixels: Array2::from_shape_vec((height, width), values).expect("length checked"),
        })
    }
}

fn header_number(bytes: &[u8], pos: &mut usize) -> Option<usize> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
}

pub fn read_pgm(path: &Path) -> Result<PgmImage> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    PgmImage::decode(&bytes, path)
}

pub fn write_pgm(path: &Path, image: &PgmImage) -> Result<()> {
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(&image.encode()).map_err(io_err(path))
}

/// Loads a grayscale image with values scaled to [0, 1].
pub fn load_grayscale(path: &Path) -> Result<Array2<f64>> {
    Ok(read_pgm(path)?.to_unit())
}

/// Saves values in [0, 1] as a PGM with `maxval` levels (255 or 65535 typically).
pub fn save_grayscale(path: &Path, values: &Array2<f64>, maxval: u16) -> Result<()> {
    write_pgm(path, &PgmImage::from_unit(values, maxval))
}
