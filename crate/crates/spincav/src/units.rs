//! Unit conversions. Internally time is in ns and angular frequency in rad/ns.

use std::f64::consts::TAU;

/// Frequency in MHz (as quoted, i.e. nu = omega/2pi) to angular frequency in rad/ns.
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    TAU * f_mhz * 1e-3
}

pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / TAU * 1e3
}

pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    TAU * f_ghz
}

pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / TAU
}
