//! Physical constants and unit conversions. Everything internal is SI:
//! meters, seconds, rad/s.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// Coefficient of the Gaussian approximation sinc(x) ~ exp(-GAMMA x^2).
pub const GAMMA: f64 = 0.193;

pub const NM: f64 = 1e-9;
pub const UM: f64 = 1e-6;
pub const MM: f64 = 1e-3;
pub const PS: f64 = 1e-12;
/// Angular-frequency "THz": 1e12 rad/s.
pub const THZ: f64 = 1e12;

#[inline]
pub fn wavelength_to_omega(lambda: f64) -> f64 {
    2.0 * PI * C / lambda
}

#[inline]
pub fn omega_to_wavelength(omega: f64) -> f64 {
    2.0 * PI * C / omega
}

/// Idler wavelength from energy conservation, 1/λ_i = 1/λ_p − 1/λ_s.
#[inline]
pub fn idler_wavelength(pump: f64, signal: f64) -> f64 {
    1.0 / (1.0 / pump - 1.0 / signal)
}

/// Pump wavelength producing a given signal/idler pair.
#[inline]
pub fn pump_wavelength(signal: f64, idler: f64) -> f64 {
    1.0 / (1.0 / signal + 1.0 / idler)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_conservation_round_trip() {
        let (p, s) = (521.0 * NM, 775.0 * NM);
        let i = idler_wavelength(p, s);
        assert!((1.0 / i - (1.0 / p - 1.0 / s)).abs() * i < 1e-14);
        assert!((pump_wavelength(s, i) - p).abs() / p < 1e-14);
        let w = wavelength_to_omega(p);
        assert!((omega_to_wavelength(w) - p).abs() / p < 1e-15);
    }
}
