//! Image comparison metrics: gray-level RMSE, line profiles, correlation and contrast.

use std::ops::Range;

use ndarray::{Array2, ArrayView1, Axis as NdAxis};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FpmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Column,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineProfile {
    pub axis: Axis,
    pub index: usize,
    pub values: Vec<f64>,
    pub positions: Vec<usize>,
}

fn check_dims(a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(FpmError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

fn min_max<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// RMSE after mapping both images to [0, 255] with one shared affine map
/// (min and max of the pair). Identical constant images give 0.
pub fn rmse_gray(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    check_dims(a, b)?;
    let (lo, hi) = min_max(a.iter().chain(b.iter()));
    if !(hi > lo) {
        return Ok(0.0);
    }
    let k = 255.0 / (hi - lo);
    let mse = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| ((x - y) * k).powi(2))
        .sum::<f64>()
        / a.len() as f64;
    Ok(mse.sqrt())
}

fn line(img: &Array2<f64>, axis: Axis, index: usize) -> Result<ArrayView1<'_, f64>> {
    let (nd, extent) = match axis {
        Axis::Row => (NdAxis(0), img.nrows()),
        Axis::Column => (NdAxis(1), img.ncols()),
    };
    if index >= extent {
        return Err(invalid("index", format!("{index} outside 0..{extent}")));
    }
    Ok(img.index_axis(nd, index))
}

/// One row or column mapped to [0, 255] by the image's own min/max.
pub fn line_profile(img: &Array2<f64>, axis: Axis, index: usize) -> Result<LineProfile> {
    let (lo, hi) = min_max(img.iter());
    let values = line(img, axis, index)?
        .iter()
        .map(|v| if hi > lo { (v - lo) * 255.0 / (hi - lo) } else { 0.0 })
        .collect::<Vec<_>>();
    Ok(LineProfile {
        axis,
        index,
        positions: (0..values.len()).collect(),
        values,
    })
}

/// One row or column in the image's own units.
pub fn raw_line_profile(img: &Array2<f64>, axis: Axis, index: usize) -> Result<LineProfile> {
    let values = line(img, axis, index)?.to_vec();
    Ok(LineProfile {
        axis,
        index,
        positions: (0..values.len()).collect(),
        values,
    })
}

/// Profiles of two images under one shared [0, 255] map.
pub fn joint_line_profiles(
    a: &Array2<f64>,
    b: &Array2<f64>,
    axis: Axis,
    index: usize,
) -> Result<(LineProfile, LineProfile)> {
    check_dims(a, b)?;
    let (lo, hi) = min_max(a.iter().chain(b.iter()));
    let map = |img: &Array2<f64>| -> Result<LineProfile> {
        let mut p = raw_line_profile(img, axis, index)?;
        for v in p.values.iter_mut() {
            *v = if hi > lo { (*v - lo) * 255.0 / (hi - lo) } else { 0.0 };
        }
        Ok(p)
    };
    Ok((map(a)?, map(b)?))
}

/// Pearson correlation over all pixels. One constant image gives 0;
/// two constant images are an error.
pub fn normalized_cross_correlation(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    check_dims(a, b)?;
    let n = a.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 && sbb == 0.0 {
        return Err(invalid("images", "both images are constant"));
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(0.0);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// `(max − min)/(max + min)` over `window`; 0 for constant windows.
pub fn michelson_contrast(profile: &LineProfile, window: Range<usize>) -> Result<f64> {
    if window.start >= window.end || window.end > profile.values.len() {
        return Err(invalid(
            "window",
            format!("{window:?} outside profile of length {}", profile.values.len()),
        ));
    }
    let (lo, hi) = min_max(profile.values[window].iter());
    if hi == lo {
        return Ok(0.0);
    }
    if hi + lo == 0.0 {
        return Err(invalid("window", "max + min is zero"));
    }
    Ok((hi - lo) / (hi + lo))
}

/// Amplitude of the `period`-pixel sinusoid in `values` relative to the
/// local mean, from a least-squares fit of a quadratic trend plus cosine and
/// sine. The trend terms keep slow background variation and blurred group
/// envelopes from leaking into a short window. Equals the Michelson contrast for a pure sinusoid on a flat
/// background.
pub fn modulation_depth(values: &[f64], period: f64) -> Result<f64> {
    if values.len() < 2 * K || !(period > 0.0) {
        return Err(invalid("period", format!("need at least {} samples and a positive period", 2 * K)));
    }
    let xm = (values.len() as f64 - 1.0) / 2.0;
    let w = std::f64::consts::TAU / period;
    let half = xm.max(1.0);
    let mut gram = [[0.0; K]; K];
    let mut rhs = [0.0; K];
    for (x, &v) in values.iter().enumerate() {
        let (s, c) = (w * x as f64).sin_cos();
        let t = (x as f64 - xm) / half;
        let basis = [c, s, 1.0, t, t * t];
        for a in 0..K {
            rhs[a] += basis[a] * v;
            for b in 0..K {
                gram[a][b] += basis[a] * basis[b];
            }
        }
    }
    let p = solve(gram, rhs).ok_or_else(|| invalid("period", "sinusoid not identifiable in this window"))?;
    // trend value at the window center
    let level = p[2];
    if level == 0.0 {
        return Err(invalid("values", "zero mean"));
    }
    Ok(p[0].hypot(p[1]) / level.abs())
}

const K: usize = 5;

/// Gaussian elimination with partial pivoting.
fn solve(mut m: [[f64; K]; K], mut y: [f64; K]) -> Option<[f64; K]> {
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    for k in 0..K {
        let piv = (k..K).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))?;
        if m[piv][k].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(k, piv);
        y.swap(k, piv);
        for r in k + 1..K {
            let f = m[r][k] / m[k][k];
            for c in k..K {
                m[r][c] -= f * m[k][c];
            }
            y[r] -= f * y[k];
        }
    }
    let mut x = [0.0; K];
    for k in (0..K).rev() {
        let tail: f64 = (k + 1..K).map(|c| m[k][c] * x[c]).sum();
        x[k] = (y[k] - tail) / m[k][k];
    }
    Some(x)
}
