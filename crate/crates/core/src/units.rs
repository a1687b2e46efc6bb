//! Small numeric helpers shared across modules.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Free-space wave impedance, ohms.
pub const ETA0: f64 = 376.730_313_668;

#[inline]
pub fn angular(f: f64) -> f64 {
    2.0 * PI * f
}

#[inline]
pub fn wavelength(f: f64) -> f64 {
    C0 / f
}

/// Power ratio to dB.
#[inline]
pub fn db10(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Amplitude ratio to dB.
#[inline]
pub fn db20(x: f64) -> f64 {
    20.0 * x.log10()
}

#[inline]
pub fn deg(rad: f64) -> f64 {
    rad.to_degrees()
}

#[inline]
pub fn rad(deg: f64) -> f64 {
    deg.to_radians()
}
