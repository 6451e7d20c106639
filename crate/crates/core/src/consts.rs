//! Physical constants (SI).

use std::f64::consts::PI;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Angular frequency (rad/s) from an ordinary frequency (Hz).
#[inline]
pub fn angular(freq_hz: f64) -> f64 {
    2.0 * PI * freq_hz
}

/// Ordinary frequency (Hz) from an angular frequency (rad/s).
#[inline]
pub fn ordinary(omega: f64) -> f64 {
    omega / (2.0 * PI)
}
