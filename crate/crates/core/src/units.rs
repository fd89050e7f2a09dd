//! Unit conversions between the I/O conventions and the internal rad/ns, ns system.

use std::f64::consts::PI;

/// One 2π×MHz expressed in rad/ns.
pub const MHZ_2PI: f64 = 2.0 * PI * 1e-3;

/// One kHz (plain rate, 1e3 s⁻¹) expressed in ns⁻¹.
pub const KHZ: f64 = 1e-6;

pub fn from_mhz_2pi(value: f64) -> f64 {
    value * MHZ_2PI
}

pub fn to_mhz_2pi(rad_per_ns: f64) -> f64 {
    rad_per_ns / MHZ_2PI
}

pub fn from_khz(value: f64) -> f64 {
    value * KHZ
}
