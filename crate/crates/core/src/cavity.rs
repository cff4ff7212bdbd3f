//! Fabry-Pérot Purcell transfer function and its action on spectra and
//! radiative rates.
//!
//! Lengths follow the config convention: `L` and `d` in μm, `δL` and all
//! wavelengths in nm. Everything is converted to nm before use.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::spectra::{EmissionSpectrum, RateTable, TransitionLine};

/// Half-width of the integration window around each line, in FWHM.
const WINDOW_FWHM: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub reflectivity: f64,
    pub length_um: f64,
    #[serde(default)]
    pub length_mismatch_nm: f64,
    pub diameter_um: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        CavityConfig {
            reflectivity: 0.98,
            length_um: 7.7736,
            length_mismatch_nm: 0.0,
            diameter_um: 3.11,
        }
    }
}

/// Whether suppression (Γ/Γ_sp < 1) is kept or clamped away.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CavityResponse {
    #[default]
    Full,
    EnhancementOnly,
}

impl CavityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.reflectivity) {
            return Err(Error::Config(format!(
                "reflectivity must lie in [0, 1), got {}",
                self.reflectivity
            )));
        }
        if !(self.length_um > 0.0 && self.length_um.is_finite()) {
            return Err(Error::Config(format!("cavity length must be positive, got {} um", self.length_um)));
        }
        if !(self.diameter_um > 0.0 && self.diameter_um.is_finite()) {
            return Err(Error::Config(format!(
                "cavity diameter must be positive, got {} um",
                self.diameter_um
            )));
        }
        if !self.length_mismatch_nm.is_finite() || self.effective_length_nm() <= 0.0 {
            return Err(Error::Config(format!(
                "length mismatch {} nm leaves no cavity",
                self.length_mismatch_nm
            )));
        }
        Ok(())
    }

    /// `Some(message)` when the solid-angle fraction reaches 1 and the 1-D
    /// model stops being meaningful.
    pub fn validity_warning(&self) -> Option<String> {
        let fraction = self.solid_angle_fraction();
        (fraction >= 1.0).then(|| {
            format!(
                "cavity diameter {} um is not small against 2L = {} um (3(d/2L)^2 = {fraction:.3}); the 1-D cavity model is outside its validity range",
                self.diameter_um,
                2.0 * self.length_um
            )
        })
    }

    pub fn with_reflectivity(mut self, reflectivity: f64) -> Self {
        self.reflectivity = reflectivity;
        self
    }

    pub fn with_mismatch(mut self, length_mismatch_nm: f64) -> Self {
        self.length_mismatch_nm = length_mismatch_nm;
        self
    }

    /// Cavity length resonant with `wavelength` at longitudinal order `order`.
    pub fn resonant_length_um(wavelength: f64, order: u32) -> f64 {
        order as f64 * wavelength / 2.0 * 1e-3
    }

    pub fn effective_length_nm(&self) -> f64 {
        self.length_um * 1e3 + self.length_mismatch_nm
    }

    pub fn finesse_factor(&self) -> f64 {
        1.0 / (1.0 - self.reflectivity)
    }

    /// 3(d/2L)², the fraction of dipole emission that sees the cavity.
    pub fn solid_angle_fraction(&self) -> f64 {
        let ratio = self.diameter_um / (2.0 * self.length_um);
        3.0 * ratio * ratio
    }

    /// Resonance wavelengths 2(L+δL)/m inside `[lo, hi]`.
    pub fn resonances_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let two_l = 2.0 * self.effective_length_nm();
        let m_min = (two_l / hi).ceil().max(1.0) as u64;
        let m_max = (two_l / lo).floor() as u64;
        (m_min..=m_max)
            .rev()
            .map(|m| two_l / m as f64)
            .filter(|&w| w >= lo && w <= hi)
            .collect()
    }
}

/// Rate ratio γ/γ_sp into the cavity mode.
pub fn purcell_ratio(wavelength: f64, cavity: &CavityConfig) -> f64 {
    let f = cavity.finesse_factor();
    let s = (2.0 * PI * cavity.effective_length_nm() / wavelength).sin();
    f / (1.0 + f * f * s * s)
}

/// Total rate ratio Γ/Γ_sp including the free-space share.
pub fn total_rate_ratio(wavelength: f64, cavity: &CavityConfig) -> f64 {
    1.0 + (purcell_ratio(wavelength, cavity) - 1.0) * cavity.solid_angle_fraction()
}

pub fn response_ratio(wavelength: f64, cavity: &CavityConfig, response: CavityResponse) -> f64 {
    let ratio = total_rate_ratio(wavelength, cavity);
    match response {
        CavityResponse::Full => ratio,
        CavityResponse::EnhancementOnly => ratio.max(1.0),
    }
}

/// Resonance spacing λ²/(2(L+δL)) in nm.
pub fn free_spectral_range(cavity: &CavityConfig, wavelength: f64) -> f64 {
    wavelength * wavelength / (2.0 * cavity.effective_length_nm())
}

pub fn modify_spectrum(spectrum: &EmissionSpectrum, cavity: &CavityConfig) -> Result<EmissionSpectrum> {
    spectrum.map(|w, s| s * total_rate_ratio(w, cavity))
}

/// `(λ, Γ/Γ_sp)` on `grid`.
pub fn transfer_function(cavity: &CavityConfig, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.iter().map(|&w| (w, total_rate_ratio(w, cavity))).collect()
}

/// Lorentzian-averaged rate multiplier of one line:
/// M = ∫Lor·(Γ/Γ_sp) / ∫Lor over ±20 FWHM.
pub fn line_multiplier(line: &TransitionLine, cavity: &CavityConfig, response: CavityResponse) -> Result<f64> {
    let half = 0.5 * line.fwhm;
    let a = line.center - WINDOW_FWHM * line.fwhm;
    let b = line.center + WINDOW_FWHM * line.fwhm;
    // Unit-area profile; the window holds (2/π)·atan(40) of it.
    let weight = 2.0 / PI * (2.0 * WINDOW_FWHM).atan();
    let profile = |w: f64| {
        let d = w - line.center;
        half / PI / (d * d + half * half)
    };
    let mut breaks = cavity.resonances_in(a, b);
    breaks.push(line.center);
    // Integrating (ratio - 1) keeps the relative error small when the ratio is near 1.
    let excess = quadrature::integrate(
        |w| profile(w) * (response_ratio(w, cavity, response) - 1.0),
        a,
        b,
        &breaks,
        1e-13,
        1e-11,
        20_000,
    )
    .ok_or(Error::Quadrature { a, b })?;
    Ok(1.0 + excess / weight)
}

/// Multiplies every γ_{i→j} by the cavity multiplier of its fitted line.
pub fn modify_rates(
    rates: &RateTable,
    lines: &[TransitionLine],
    cavity: &CavityConfig,
    response: CavityResponse,
) -> Result<RateTable> {
    let mut out = rates.clone();
    for ((upper, lower), rate) in rates.iter() {
        let line = lines
            .iter()
            .find(|l| l.upper == upper && l.lower == lower)
            .ok_or(Error::MissingTransition { upper, lower })?;
        out.set(upper, lower, rate * line_multiplier(line, cavity, response)?)?;
    }
    Ok(out)
}
