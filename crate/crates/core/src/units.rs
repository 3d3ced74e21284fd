//! Conversions between the human-facing units of config files and SI.

use std::f64::consts::PI;

pub const MICROMETER: f64 = 1e-6;
pub const MILLIMETER: f64 = 1e-3;
pub const FEMTOSECOND: f64 = 1e-15;
pub const TERAHERTZ: f64 = 1e12;

/// Ordinary frequency in THz to angular frequency in rad/s.
pub fn thz_to_rad_per_s(nu: f64) -> f64 {
    2.0 * PI * TERAHERTZ * nu
}

pub fn rad_per_s_to_thz(omega: f64) -> f64 {
    omega / (2.0 * PI * TERAHERTZ)
}
