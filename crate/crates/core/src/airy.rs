//! Spatial-domain Airy kernel: the inverse transform of the circ pupil,
//! evaluated analytically through `J₁` rather than through an FFT.
//!
//! The continuous kernel `K(ρ) = fc·J₁(2π·fc·ρ)/ρ` decays like `ρ^(-3/2)`, so a
//! plain sampled copy on a finite grid differs from the discrete pupil's
//! inverse DFT by ringing at the rim. The kernel here is the periodic
//! image sum `Σ_m K(x + m·L)` (Poisson summation turns it into the lattice
//! samples of the pupil), regularised with a Gaussian taper of width `W·L`.
//! The taper blurs the pupil rim by `σ = 1/(2πW)` lattice pixels, so lattice
//! points further than a few σ from the rim are reproduced essentially exactly.

use std::collections::HashMap;
use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::bessel::bessel_j1;
use crate::error::{invalid, Result};
use crate::field::{ComplexField2D, SpatialGrid};

/// Upper bound on J₁ evaluations spent on one kernel.
const EVALUATION_BUDGET: f64 = 4.0e7;
const MAX_TAPER_PERIODS: f64 = 8.0;
const MIN_TAPER_PERIODS: f64 = 0.5;
/// Images are summed out to this many taper widths.
const TAPER_EXTENT: f64 = 6.0;

#[derive(Debug, Clone)]
pub struct AiryKernel {
    /// Real-valued kernel centered at `(n/2, n/2)`; `dft2(field)` ≈ pupil mask.
    pub field: ComplexField2D,
    pub cutoff_frequency: f64,
    pub grid: SpatialGrid,
    /// Taper width in grid periods.
    pub taper_periods: f64,
    /// Smallest distance, in lattice pixels, between a frequency sample and the pupil rim.
    pub rim_clearance: f64,
}

/// Continuous kernel `fc·J₁(2π·fc·ρ)/ρ`, with its limit `π·fc²` at ρ = 0.
pub fn airy_profile(rho: f64, cutoff_frequency: f64) -> f64 {
    if rho.abs() < 1e-12 / cutoff_frequency {
        return PI * cutoff_frequency * cutoff_frequency;
    }
    cutoff_frequency * bessel_j1(2.0 * PI * cutoff_frequency * rho) / rho
}

/// First dark ring radius of the amplitude kernel, `j₁,₁ / (2π·fc)`.
pub fn first_zero_radius(cutoff_frequency: f64) -> f64 {
    const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512;
    J1_FIRST_ZERO / (2.0 * PI * cutoff_frequency)
}

pub fn airy_kernel(grid: SpatialGrid, cutoff_frequency: f64) -> Result<AiryKernel> {
    if !(grid.pitch > 0.0 && grid.pitch.is_finite()) {
        return Err(invalid("pitch", format!("must be positive, got {}", grid.pitch)));
    }
    if !(cutoff_frequency > 0.0 && cutoff_frequency.is_finite()) {
        return Err(invalid(
            "cutoff_frequency",
            format!("must be positive, got {cutoff_frequency}"),
        ));
    }
    let n = grid.pixels;
    let radius_px = cutoff_frequency / grid.frequency_grid().step;
    let clearance = rim_clearance(n, radius_px);

    // aim for the rim blur to sit five σ inside the nearest lattice point
    let wanted = if clearance > 0.0 {
        5.0 / (2.0 * PI * clearance)
    } else {
        MAX_TAPER_PERIODS
    };
    let unique_points = ((n / 2 + 1) * (n / 2 + 2) / 2) as f64;
    let affordable = (EVALUATION_BUDGET / unique_points / PI).sqrt() / TAPER_EXTENT;
    let taper = wanted
        .min(MAX_TAPER_PERIODS)
        .min(affordable)
        .max(MIN_TAPER_PERIODS);

    let samples = periodized_kernel(grid, cutoff_frequency, taper);
    Ok(AiryKernel {
        field: ComplexField2D::new(samples, grid.pitch)?,
        cutoff_frequency,
        grid,
        taper_periods: taper,
        rim_clearance: clearance,
    })
}

fn rim_clearance(n: usize, radius_px: f64) -> f64 {
    let half = (n / 2) as i64;
    let mut best = f64::INFINITY;
    for a in 0..=half {
        for b in 0..=a {
            let d = (((a * a + b * b) as f64).sqrt() - radius_px).abs();
            best = best.min(d);
        }
    }
    best
}

fn periodized_kernel(grid: SpatialGrid, cutoff: f64, taper_periods: f64) -> Array2<Complex64> {
    let n = grid.pixels;
    let nf = n as f64;
    let p = grid.pitch;
    let period = nf * p;
    let sigma = taper_periods * period;
    let reach = (TAPER_EXTENT * taper_periods).ceil() as i64 + 1;
    let limit2 = (TAPER_EXTENT * sigma).powi(2);
    // Riemann-sum scale: a lattice sum over the disc is (1/Δf²)·∫, Δf = 1/(n·p),
    // divided by n for the unitary inverse transform.
    let scale = nf * p * p;

    // Samples depend only on the folded offset (|dx|, |dy|) up to a swap.
    let mut cache: HashMap<(i64, i64), f64> = HashMap::new();
    let c = (n / 2) as i64;
    Array2::from_shape_fn((n, n), |(r, col)| {
        let dy = fold(r as i64 - c, n as i64);
        let dx = fold(col as i64 - c, n as i64);
        let key = if dx >= dy { (dx, dy) } else { (dy, dx) };
        let v = *cache.entry(key).or_insert_with(|| {
            let x0 = key.0 as f64 * p;
            let y0 = key.1 as f64 * p;
            let mut acc = 0.0;
            for mx in -reach..=reach {
                let x = x0 + mx as f64 * period;
                for my in -reach..=reach {
                    let y = y0 + my as f64 * period;
                    let r2 = x * x + y * y;
                    if r2 > limit2 {
                        continue;
                    }
                    let w = (-r2 / (2.0 * sigma * sigma)).exp();
                    acc += w * airy_profile(r2.sqrt(), cutoff);
                }
            }
            acc * scale
        });
        Complex64::new(v, 0.0)
    })
}

/// Minimum-image magnitude of an offset on a periodic axis of length `n`.
fn fold(d: i64, n: i64) -> i64 {
    let m = d.rem_euclid(n);
    m.min(n - m)
}
