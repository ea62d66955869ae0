//! Closed-form reference solutions.

use std::f64::consts::PI;

/// Free-space Gaussian hill advected with `v` and spread by `D`.
pub fn exact_gaussian_hill(x: f64, t: f64, phi: f64, sigma0: f64, x0: f64, v: f64, d: f64) -> f64 {
    let s2 = sigma0 * sigma0 + 2.0 * d * t;
    phi / (2.0 * PI * s2).sqrt() * (-(x - x0 - v * t).powi(2) / (2.0 * s2)).exp()
}

/// Decaying mode `e^{-t} sin(pi y) cos(pi x / 2)` of the unit square with
/// `D = 4 / (5 pi^2)`, zero flux at `x = 0` and zero value elsewhere.
pub fn mixed_mode(x: [f64; 2], t: f64) -> f64 {
    (-t).exp() * (PI * x[1]).sin() * (0.5 * PI * x[0]).cos()
}

pub const MIXED_MODE_DIFFUSIVITY: f64 = 4.0 / (5.0 * PI * PI);

/// Transfer-study test function `sin(2 pi x) sin(2 pi y)`.
pub fn transfer_probe(x: [f64; 2]) -> f64 {
    (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin()
}
