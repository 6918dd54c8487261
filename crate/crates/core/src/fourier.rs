//! Centered, unitary 2-D discrete Fourier transforms.
//!
//! Every spectral array keeps zero frequency at index `(h / 2, w / 2)`. The
//! transform pair is unitary (`1/√(h·w)` in each direction), so energy is
//! preserved exactly and `idft2(dft2(x)) == x` up to rounding.

use std::cell::RefCell;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::field::ComplexField2D;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Centered unitary forward transform.
pub fn dft2(field: &ComplexField2D) -> ComplexField2D {
    let samples = transform(field.samples(), FftDirection::Forward);
    ComplexField2D::new(samples, field.pitch()).expect("dimensions preserved")
}

/// Centered unitary inverse transform; exact inverse of [`dft2`].
pub fn idft2(field: &ComplexField2D) -> ComplexField2D {
    let samples = transform(field.samples(), FftDirection::Inverse);
    ComplexField2D::new(samples, field.pitch()).expect("dimensions preserved")
}

/// Array-level forward transform, same convention as [`dft2`].
pub fn dft2_array(samples: &Array2<Complex64>) -> Array2<Complex64> {
    transform(samples, FftDirection::Forward)
}

/// Array-level inverse transform, same convention as [`idft2`].
pub fn idft2_array(samples: &Array2<Complex64>) -> Array2<Complex64> {
    transform(samples, FftDirection::Inverse)
}

fn transform(samples: &Array2<Complex64>, direction: FftDirection) -> Array2<Complex64> {
    let (h, w) = samples.dim();
    let mut buf = ifftshift(samples);
    fft_rows(&mut buf, w, direction);
    let mut tr = transpose(&buf, h, w);
    fft_rows(&mut tr, h, direction);
    let buf = transpose(&tr, w, h);
    let scale = 1.0 / ((h * w) as f64).sqrt();
    let out = Array2::from_shape_vec((h, w), buf).expect("shape matches buffer");
    let mut out = fftshift(&out);
    out.mapv_inplace(|c| c * scale);
    out
}

fn fft_rows(buf: &mut [Complex64], len: usize, direction: FftDirection) {
    if len == 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction));
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(len) {
        fft.process_with_scratch(row, &mut scratch);
    }
}

/// Row-major `h x w` buffer to row-major `w x h`.
fn transpose(buf: &[Complex64], h: usize, w: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); buf.len()];
    for r in 0..h {
        for c in 0..w {
            out[c * h + r] = buf[r * w + c];
        }
    }
    out
}

/// Moves the zero-frequency sample from index 0 to the center, row-major output.
fn fftshift(a: &Array2<Complex64>) -> Array2<Complex64> {
    let (h, w) = a.dim();
    let mut out = Array2::zeros((h, w));
    for ((r, c), v) in a.indexed_iter() {
        out[[(r + h / 2) % h, (c + w / 2) % w]] = *v;
    }
    out
}

/// Inverse of [`fftshift`], returned as a flat row-major buffer.
fn ifftshift(a: &Array2<Complex64>) -> Vec<Complex64> {
    let (h, w) = a.dim();
    let mut out = vec![Complex64::default(); h * w];
    for ((r, c), v) in a.indexed_iter() {
        let rr = (r + h - h / 2) % h;
        let cc = (c + w - w / 2) % w;
        out[rr * w + cc] = *v;
    }
    out
}

/// `a * x + b * y`, elementwise, used by linearity checks and updates.
pub fn axpby(
    a: Complex64,
    x: &Array2<Complex64>,
    b: Complex64,
    y: &Array2<Complex64>,
) -> Array2<Complex64> {
    let mut out = Array2::zeros(x.dim());
    Zip::from(&mut out)
        .and(x)
        .and(y)
        .for_each(|o, &xv, &yv| *o = a * xv + b * yv);
    out
}
