use std::f64::consts::{PI, TAU};

use fpm_core::bessel::bessel_j1;

/// Bessel's integral `J₁(x) = (1/2π) ∫₀^{2π} cos(τ − x sin τ) dτ`; the
/// trapezoid rule on a periodic analytic integrand converges geometrically.
fn quadrature_j1(x: f64) -> f64 {
    let m = 400;
    let h = TAU / m as f64;
    (0..m).map(|k| {
        let t = k as f64 * h;
        (t - x * t.sin()).cos()
    }).sum::<f64>() / m as f64
}

#[test]
fn agrees_with_quadrature_on_0_to_50() {
    let mut worst = (0.0, 0.0);
    for k in 0..1000 {
        let x = 50.0 * k as f64 / 999.0;
        let e = (bessel_j1(x) - quadrature_j1(x)).abs();
        if e > worst.1 {
            worst = (x, e);
        }
    }
    assert!(worst.1 < 1e-10, "max error {:e} at x = {}", worst.1, worst.0);
}

#[test]
fn odd_and_asymptotically_decaying() {
    for x in [0.3, 2.0, 7.9, 13.0, 31.4] {
        assert_eq!(bessel_j1(-x), -bessel_j1(x));
    }
    let envelope = (2.0 / (PI * 200.0)).sqrt();
    assert!(bessel_j1(200.0).abs() <= envelope * 1.01);
}
