//! Sampled complex fields and the square grids they live on.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Square spatial sampling grid: `pixels` per side at `pitch` micrometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub pixels: usize,
    pub pitch: f64,
}

impl SpatialGrid {
    pub fn new(pixels: usize, pitch: f64) -> Result<Self> {
        if pixels == 0 {
            return Err(invalid("pixels", "grid must have at least one pixel"));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(invalid("pitch", format!("must be positive, got {pitch}")));
        }
        Ok(Self { pixels, pitch })
    }

    /// Frequency grid reached by a DFT of this grid.
    pub fn frequency_grid(&self) -> FrequencyGrid {
        FrequencyGrid {
            pixels: self.pixels,
            step: 1.0 / (self.pixels as f64 * self.pitch),
        }
    }

    /// Index of the origin sample in the centered layout.
    pub fn center(&self) -> usize {
        self.pixels / 2
    }
}

/// Square frequency sampling grid: `pixels` per side, `step` cycles/µm per pixel.
/// Zero frequency sits at index `pixels / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub pixels: usize,
    pub step: f64,
}

impl FrequencyGrid {
    pub fn new(pixels: usize, step: f64) -> Result<Self> {
        if pixels == 0 {
            return Err(invalid("pixels", "grid must have at least one pixel"));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid("step", format!("must be positive, got {step}")));
        }
        Ok(Self { pixels, step })
    }

    pub fn spatial_grid(&self) -> SpatialGrid {
        SpatialGrid {
            pixels: self.pixels,
            pitch: 1.0 / (self.pixels as f64 * self.step),
        }
    }

    pub fn center(&self) -> usize {
        self.pixels / 2
    }

    /// Largest frequency magnitude representable along one axis.
    pub fn max_frequency(&self) -> f64 {
        (self.pixels / 2) as f64 * self.step
    }
}

/// A sampled 2-D complex field: object transmittance, spectrum, or kernel.
///
/// Samples are stored row-major as `samples[[row, col]]`, rows running along
/// y. `pitch` is the sample spacing in micrometers for spatial fields; for
/// spectra it is the spacing of the spatial field the spectrum came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    samples: Array2<Complex64>,
    pitch: f64,
}

impl ComplexField2D {
    pub fn new(samples: Array2<Complex64>, pitch: f64) -> Result<Self> {
        let (h, w) = samples.dim();
        if h == 0 || w == 0 {
            return Err(invalid("samples", "field must be at least 1x1"));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(invalid("pitch", format!("must be positive, got {pitch}")));
        }
        Ok(Self { samples, pitch })
    }

    pub fn zeros(width: usize, height: usize, pitch: f64) -> Result<Self> {
        Self::new(Array2::zeros((height, width)), pitch)
    }

    pub fn from_real(values: &Array2<f64>, pitch: f64) -> Result<Self> {
        Self::new(values.mapv(|v| Complex64::new(v, 0.0)), pitch)
    }

    pub fn width(&self) -> usize {
        self.samples.ncols()
    }

    pub fn height(&self) -> usize {
        self.samples.nrows()
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn dim(&self) -> (usize, usize) {
        self.samples.dim()
    }

    pub fn samples(&self) -> &Array2<Complex64> {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.samples
    }

    pub fn into_samples(self) -> Array2<Complex64> {
        self.samples
    }

    /// Sum of squared moduli.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn intensity(&self) -> Array2<f64> {
        self.samples.mapv(|c| c.norm_sqr())
    }

    pub fn amplitude(&self) -> Array2<f64> {
        self.samples.mapv(|c| c.norm())
    }

    /// Argument of every sample, in (−π, π].
    pub fn phase(&self) -> Array2<f64> {
        self.samples.mapv(|c| c.arg())
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}
