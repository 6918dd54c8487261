//! First-kind Bessel function of order one.

use std::f64::consts::{FRAC_PI_4, PI};

/// Below this magnitude the ascending series is summed directly; above it the
/// Hankel asymptotic expansion is already accurate to ~1e-12.
const SERIES_LIMIT: f64 = 13.0;

/// `J₁(x)`, absolute error below 1e-10 on |x| ≤ 50.
pub fn bessel_j1(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let v = if ax < SERIES_LIMIT {
        ascending_series(ax)
    } else {
        hankel_asymptotic(ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn ascending_series(x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = half;
    let mut sum = term;
    let mut k = 0.0;
    loop {
        term *= -q / ((k + 1.0) * (k + 2.0));
        sum += term;
        k += 1.0;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && k > half {
            break;
        }
        if k > 200.0 {
            break;
        }
    }
    sum
}

/// `J₁(x) ≈ √(2/(πx)) (P cos χ − Q sin χ)`, χ = x − 3π/4, summed up to the
/// smallest term of the divergent series.
fn hankel_asymptotic(x: f64) -> f64 {
    const MU: f64 = 4.0;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0; // a_k / x^k
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (MU - odd * odd) / (k as f64 * 8.0 * x);
        }
        if a.abs() > last {
            break;
        }
        last = a.abs();
        // P collects even k with sign (−1)^(k/2), Q odd k with sign (−1)^((k−1)/2)
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - 3.0 * FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
