//! Ideal circular coherent pupil on a centered frequency grid.

use ndarray::Array2;

use crate::error::{invalid, Result};
use crate::field::FrequencyGrid;

/// Binary circ pupil: 1 where `√(u²+v²) ≤ cutoff_frequency` (inclusive), else 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Pupil {
    /// Coherent cutoff NA/λ in cycles per micrometer.
    pub cutoff_frequency: f64,
    pub grid: FrequencyGrid,
    pub mask: Array2<f64>,
    /// Cutoff expressed in grid pixels.
    pub pixel_radius: f64,
    /// Set when the disc extends past the grid's largest representable frequency.
    pub clipped: bool,
}

impl Pupil {
    /// Number of passing samples.
    pub fn area(&self) -> usize {
        self.mask.iter().filter(|&&m| m > 0.0).count()
    }

    pub fn passes(&self, row: usize, col: usize) -> bool {
        self.mask[[row, col]] > 0.0
    }

    /// (row, col) of every passing sample, in row-major order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.mask
            .indexed_iter()
            .filter(|(_, &m)| m > 0.0)
            .map(|(idx, _)| idx)
            .collect()
    }
}

pub fn make_pupil(cutoff_frequency: f64, grid: FrequencyGrid) -> Result<Pupil> {
    if !(cutoff_frequency > 0.0 && cutoff_frequency.is_finite()) {
        return Err(invalid(
            "cutoff_frequency",
            format!("must be positive, got {cutoff_frequency}"),
        ));
    }
    if !(grid.step > 0.0 && grid.step.is_finite()) {
        return Err(invalid("step", format!("must be positive, got {}", grid.step)));
    }
    let n = grid.pixels;
    let c = grid.center() as i64;
    let pixel_radius = cutoff_frequency / grid.step;
    let r2 = pixel_radius * pixel_radius;
    let mask = Array2::from_shape_fn((n, n), |(r, col)| {
        let dv = (r as i64 - c) as f64;
        let du = (col as i64 - c) as f64;
        if du * du + dv * dv <= r2 {
            1.0
        } else {
            0.0
        }
    });
    Ok(Pupil {
        cutoff_frequency,
        grid,
        mask,
        pixel_radius,
        clipped: cutoff_frequency > grid.max_frequency(),
    })
}
