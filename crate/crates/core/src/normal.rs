//! Standard normal helpers.
//!
//! `cdf` goes through the fdlibm complementary error function (via `libm`),
//! accurate to within an ulp. `quantile` uses the inverse complementary error
//! function from `statrs`.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc_inv;

pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Inverse of [`cdf`] on (0, 1).
pub fn quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

pub fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

pub fn pdf(x: f64) -> f64 {
    ln_pdf(x).exp()
}
