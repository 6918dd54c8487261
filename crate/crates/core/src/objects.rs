//! Synthetic thin objects `A·exp(jφ)` built from grayscale sources.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FpmError, Result};
use crate::field::ComplexField2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectKind {
    AmplitudeOnly,
    PhaseOnly,
    Complex,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 3] = [
        ObjectKind::AmplitudeOnly,
        ObjectKind::PhaseOnly,
        ObjectKind::Complex,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectKind::AmplitudeOnly => "amplitude-only",
            ObjectKind::PhaseOnly => "phase-only",
            ObjectKind::Complex => "complex",
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectKind {
    type Err = FpmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude-only" => Ok(ObjectKind::AmplitudeOnly),
            "phase-only" => Ok(ObjectKind::PhaseOnly),
            "complex" => Ok(ObjectKind::Complex),
            other => Err(invalid("kind", format!("unknown object kind `{other}`"))),
        }
    }
}

/// Where an amplitude or phase map comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectSource {
    /// Constant map of the given side length.
    Uniform(usize),
    Image(Array2<f64>),
}

impl ObjectSource {
    fn dim(&self) -> (usize, usize) {
        match self {
            ObjectSource::Uniform(n) => (*n, *n),
            ObjectSource::Image(img) => img.dim(),
        }
    }

    fn describe(&self) -> String {
        match self {
            ObjectSource::Uniform(_) => "uniform".into(),
            ObjectSource::Image(img) => format!("image {}x{}", img.ncols(), img.nrows()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexObject {
    pub field: ComplexField2D,
    pub amplitude_source: String,
    pub phase_source: String,
    pub phase_range: f64,
}

impl ComplexObject {
    pub fn size(&self) -> usize {
        self.field.width()
    }

    pub fn amplitude(&self) -> Array2<f64> {
        self.field.amplitude()
    }

    pub fn phase(&self) -> Array2<f64> {
        self.field.phase()
    }
}

/// Builds `A·exp(jφ)`: amplitude rescaled to [0, 1], phase to [0, phase_range].
/// Constant sources give amplitude 1 and phase 0.
pub fn make_object(
    amplitude: &ObjectSource,
    phase: &ObjectSource,
    phase_range: f64,
    pitch: f64,
) -> Result<ComplexObject> {
    if !(phase_range >= 0.0 && phase_range.is_finite()) {
        return Err(invalid("phase_range", format!("must be non-negative, got {phase_range}")));
    }
    let dim = match (amplitude, phase) {
        (ObjectSource::Image(a), ObjectSource::Image(p)) if a.dim() != p.dim() => {
            return Err(FpmError::DimensionMismatch {
                expected: a.dim(),
                found: p.dim(),
            })
        }
        (ObjectSource::Image(a), _) => a.dim(),
        (_, ObjectSource::Image(p)) => p.dim(),
        (a, _) => a.dim(),
    };
    if dim.0 != dim.1 {
        return Err(invalid("image", format!("object must be square, got {}x{}", dim.1, dim.0)));
    }
    let amp = rescale(amplitude, dim, 1.0, 1.0);
    let ph = rescale(phase, dim, phase_range, 0.0);
    let mut samples = Array2::zeros(dim);
    ndarray::Zip::from(&mut samples)
        .and(&amp)
        .and(&ph)
        .for_each(|s, &a, &p| *s = Complex64::from_polar(a, p));
    Ok(ComplexObject {
        field: ComplexField2D::new(samples, pitch)?,
        amplitude_source: amplitude.describe(),
        phase_source: phase.describe(),
        phase_range,
    })
}

fn rescale(source: &ObjectSource, dim: (usize, usize), top: f64, constant: f64) -> Array2<f64> {
    match source {
        ObjectSource::Uniform(_) => Array2::from_elem(dim, constant),
        ObjectSource::Image(img) => {
            let lo = img.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = img.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                img.mapv(|v| (v - lo) / (hi - lo) * top)
            } else {
                Array2::from_elem(dim, constant)
            }
        }
    }
}

/// Deterministic procedural test object on a `size`-pixel grid.
///
/// The amplitude (and for phase-only, the phase) map is a set of USAF-like
/// three-bar groups whose periods shrink geometrically, laid over a smooth
/// low-frequency background. The complex object takes its phase from a
/// second, differently arranged pattern so amplitude and phase structures
/// do not coincide.
pub fn standard_test_object(
    kind: ObjectKind,
    size: usize,
    phase_range: f64,
    pitch: f64,
    seed: u64,
) -> Result<ComplexObject> {
    if size < 32 {
        return Err(invalid("size", format!("must be at least 32, got {size}")));
    }
    let bars = ObjectSource::Image(bar_target(size, seed).image);
    let uniform = ObjectSource::Uniform(size);
    let mut obj = match kind {
        ObjectKind::AmplitudeOnly => make_object(&bars, &uniform, phase_range, pitch)?,
        ObjectKind::PhaseOnly => make_object(&uniform, &bars, phase_range, pitch)?,
        ObjectKind::Complex => {
            let other = ObjectSource::Image(companion_pattern(size, seed));
            make_object(&bars, &other, phase_range, pitch)?
        }
    };
    obj.amplitude_source = match kind {
        ObjectKind::PhaseOnly => "uniform".into(),
        _ => format!("bar target (seed {seed})"),
    };
    obj.phase_source = match kind {
        ObjectKind::AmplitudeOnly => "uniform".into(),
        ObjectKind::PhaseOnly => format!("bar target (seed {seed})"),
        ObjectKind::Complex => format!("companion pattern (seed {seed})"),
    };
    Ok(obj)
}

/// One group of the procedural target: a triple of vertical bars and, to
/// its right, a triple of horizontal bars with the same period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarGroup {
    /// Bar period in object pixels.
    pub period: f64,
    /// Top-left corner of the vertical triple (intensity varies along x).
    pub row: usize,
    pub col: usize,
    /// Extent of a triple across its bars (2.5 periods) and along them.
    pub width: usize,
    pub length: usize,
    /// Top-left corner of the horizontal triple (intensity varies along y).
    pub h_row: usize,
    pub h_col: usize,
}

impl BarGroup {
    fn three_periods(&self) -> usize {
        (3.0 * self.period).round() as usize
    }

    /// Row through the middle of the vertical bars.
    pub fn center_row(&self) -> usize {
        self.row + self.length / 2
    }

    /// Columns spanning three periods from the first vertical bar's edge.
    pub fn profile_window(&self) -> std::ops::Range<usize> {
        self.col..self.col + self.three_periods()
    }

    /// Column through the middle of the horizontal bars.
    pub fn center_col(&self) -> usize {
        self.h_col + self.length / 2
    }

    /// Rows spanning three periods from the first horizontal bar's edge.
    pub fn column_window(&self) -> std::ops::Range<usize> {
        self.h_row..self.h_row + self.three_periods()
    }
}

#[derive(Debug, Clone)]
pub struct BarTarget {
    pub image: Array2<f64>,
    pub groups: Vec<BarGroup>,
}

const GROUP_COUNT: usize = 9;
const PERIOD_RATIO: f64 = 0.75;

/// 1 where the center of pixel `x` lies on one of three bars of width
/// `period / 2` starting at 0, period, 2·period.
fn on_bar(x: usize, period: f64) -> f64 {
    let c = x as f64 + 0.5;
    let k = (c / period).floor();
    if k < 3.0 && c - k * period < period / 2.0 {
        1.0
    } else {
        0.0
    }
}

/// Layout of the bar groups for a given size and seed (background included).
///
/// Bars are binary: a pixel belongs to a bar when its center does, so bar
/// widths alternate by a pixel for non-integer periods.
pub fn bar_target(size: usize, seed: u64) -> BarTarget {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let cells = 3;
    let cell = size / cells;
    let tilt = rng.random_range(0.0..PI);
    let wobble = rng.random_range(0.0..2.0 * PI);
    let mut image = Array2::from_shape_fn((size, size), |(r, c)| {
        let (x, y) = (c as f64 / s, r as f64 / s);
        let ramp = x * tilt.cos() + y * tilt.sin();
        0.25 + 0.1 * ramp + 0.05 * (2.0 * PI * (x + 0.5 * y) + wobble).sin()
    });

    let first_period = s / 24.0;
    let mut groups = Vec::with_capacity(GROUP_COUNT);
    for k in 0..GROUP_COUNT {
        let period = (first_period * PERIOD_RATIO.powi(k as i32)).max(2.0);
        let width = (2.5 * period).ceil() as usize;
        let length = width;
        let gap = period.max(4.0).ceil() as usize;
        let span = 2 * width + gap;
        let (cr, cc) = (k / cells, k % cells);
        let jitter = |rng: &mut ChaCha8Rng, extent: usize| -> usize {
            let slack = cell.saturating_sub(extent);
            (slack / 2 + rng.random_range(0..=slack / 2) - slack / 4).min(slack)
        };
        let row = (cr * cell + jitter(&mut rng, length)).min(size - length);
        let col = (cc * cell + jitter(&mut rng, span)).min(size - span);
        let (h_row, h_col) = (row, col + width + gap);
        let group = BarGroup {
            period,
            row,
            col,
            width,
            length,
            h_row,
            h_col,
        };
        for i in 0..length {
            for t in 0..width {
                let f = on_bar(t, period);
                let v = &mut image[[row + i, col + t]];
                *v += (1.0 - *v) * f;
                let h = &mut image[[h_row + t, h_col + i]];
                *h += (1.0 - *h) * f;
            }
        }
        groups.push(group);
    }
    BarTarget { image, groups }
}

/// Smooth blobs plus a rotated copy of the bar target, used as the phase of
/// the complex test object.
fn companion_pattern(size: usize, seed: u64) -> Array2<f64> {
    let target = bar_target(size, seed.wrapping_add(0x9e37_79b9));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    let s = size as f64;
    let blobs: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random_range(0.1..0.9) * s,
                rng.random_range(0.1..0.9) * s,
                rng.random_range(0.06..0.15) * s,
                rng.random_range(0.3..0.7),
            )
        })
        .collect();
    Array2::from_shape_fn((size, size), |(r, c)| {
        // transpose of the second target: its bars run the other way
        let bars = target.image[[c, size - 1 - r]];
        let smooth: f64 = blobs
            .iter()
            .map(|&(br, bc, w, a)| {
                let d2 = (r as f64 - br).powi(2) + (c as f64 - bc).powi(2);
                a * (-d2 / (2.0 * w * w)).exp()
            })
            .sum();
        0.6 * bars + 0.4 * smooth.min(1.0)
    })
}
