//! CODATA 2018 constants in SI units.

use std::f64::consts::PI;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Speed of light in vacuum (m/s).
    pub c: f64,
    /// Vacuum permittivity (F/m).
    pub epsilon_0: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    c: 299_792_458.0,
    epsilon_0: 8.854_187_812_8e-12,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA
    }
}

impl PhysicalConstants {
    /// Angular frequency (rad/s) of an energy given in wavenumbers (cm⁻¹).
    pub fn wavenumber_to_angular(&self, wavenumber: f64) -> f64 {
        2.0 * PI * self.c * 100.0 * wavenumber
    }

    /// Inverse temperature β = 1/k_B T (1/J).
    pub fn beta(&self, temperature: f64) -> f64 {
        1.0 / (self.k_b * temperature)
    }
}

/// Vacuum wavelength in nm of a transition with the given energy gap in cm⁻¹.
pub fn wavenumber_to_nm(wavenumber: f64) -> f64 {
    1.0e7 / wavenumber
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_wavenumber_in_rad_per_second() {
        let w = CODATA.wavenumber_to_angular(1.0);
        assert!((w - 188_365_156_730.885_3).abs() < 1e-3);
    }

    #[test]
    fn wavelength_of_zero_phonon_line() {
        assert!((wavenumber_to_nm(10291.0) - 971.722_864_639_004_9).abs() < 1e-9);
    }
}
