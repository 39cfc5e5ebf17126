//! Conversions between cyclic and angular frequency.

use std::f64::consts::TAU;

pub fn hz(f: f64) -> f64 {
    TAU * f
}

pub fn khz(f: f64) -> f64 {
    TAU * f * 1e3
}

pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

pub fn ghz(f: f64) -> f64 {
    TAU * f * 1e9
}

/// Angular rate back to Hz.
pub fn to_hz(omega: f64) -> f64 {
    omega / TAU
}

pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU * 1e-6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((to_hz(hz(123.5)) - 123.5).abs() < 1e-12);
        assert!((to_mhz(mhz(817.0)) - 817.0).abs() < 1e-9);
        assert!((ghz(1.0) - mhz(1000.0)).abs() < 1e-3);
        assert!((khz(2.0) - hz(2000.0)).abs() < 1e-9);
    }
}
