//! Unit conventions and conversions.
//!
//! Internally everything is ℏ = 1 with angular frequencies in rad/µs and
//! times in µs. Configs and the CLI speak ordinary frequencies (GHz, MHz),
//! which are multiplied by 2π at the boundary. With µs as the time unit,
//! 1 MHz of ordinary frequency is exactly 2π rad/µs.

use std::f64::consts::TAU;

/// Ordinary frequency in GHz to angular frequency in rad/µs.
pub fn ghz(nu: f64) -> f64 {
    TAU * 1e3 * nu
}

/// Ordinary frequency in MHz to angular frequency in rad/µs.
pub fn mhz(nu: f64) -> f64 {
    TAU * nu
}

/// Angular frequency in rad/µs to ordinary frequency in GHz.
pub fn to_ghz(omega: f64) -> f64 {
    omega / (TAU * 1e3)
}

/// Angular frequency in rad/µs to ordinary frequency in MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU
}
