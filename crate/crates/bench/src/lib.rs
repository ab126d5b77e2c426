//! Shared benchmark fixtures.

use qpurify_core::dissipative::DissipativeParams;
use qpurify_core::linalg::c64;
use qpurify_core::{CMat2, C64};

pub fn reference_params(gamma_tau: f64) -> DissipativeParams {
    let tau = 5.5;
    DissipativeParams::new(2.5, 0.8, gamma_tau / tau, tau, c64(1.0, 0.0))
        .expect("valid parameters")
        .with_shifts(0.0, 0.5)
}

pub fn mixed() -> CMat2 {
    CMat2::identity() * c64(0.5, 0.0)
}

/// `count` points on a circle, evenly spaced.
pub fn ring_points(count: usize) -> Vec<C64> {
    (0..count)
        .map(|i| C64::from_polar(1.0, std::f64::consts::TAU * i as f64 / count as f64 + 0.1))
        .collect()
}
