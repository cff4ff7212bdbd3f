//! Level structure, environment and pump parameters shared by every stage of
//! the pipeline, plus the two scalar physics helpers that depend only on them.

use serde::{Deserialize, Serialize};

use crate::constants::{wavenumber_to_nm, PhysicalConstants};
use crate::error::{Error, Result};

/// Number of Stark levels in the model.
pub const NUM_LEVELS: usize = 7;
/// Ground-manifold levels (1-based), lowest first.
pub const GROUND: [usize; 4] = [1, 2, 3, 4];
/// Excited-manifold levels (1-based), lowest first.
pub const EXCITED: [usize; 3] = [5, 6, 7];

/// Stark-level energies of the two lowest manifolds, in cm⁻¹ relative to
/// level 1. Levels are addressed 1-based throughout the public API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LevelStructureRaw", into = "LevelStructureRaw")]
pub struct LevelStructure {
    energies: [f64; NUM_LEVELS],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelStructureRaw {
    energies_cm: [f64; NUM_LEVELS],
}

impl TryFrom<LevelStructureRaw> for LevelStructure {
    type Error = Error;
    fn try_from(raw: LevelStructureRaw) -> Result<Self> {
        LevelStructure::new(raw.energies_cm)
    }
}

impl From<LevelStructure> for LevelStructureRaw {
    fn from(levels: LevelStructure) -> Self {
        LevelStructureRaw {
            energies_cm: levels.energies,
        }
    }
}

impl Default for LevelStructure {
    fn default() -> Self {
        LevelStructure {
            energies: [0.0, 216.0, 246.0, 479.0, 10291.0, 10413.0, 10554.0],
        }
    }
}

impl LevelStructure {
    pub fn new(energies: [f64; NUM_LEVELS]) -> Result<Self> {
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Config("level energies must be finite".into()));
        }
        if energies[0] != 0.0 {
            return Err(Error::Config(format!(
                "level energies are relative to level 1, got ε₁ = {}",
                energies[0]
            )));
        }
        if let Some(k) = energies.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "level energies must be strictly increasing (ε{} = {} ≥ ε{} = {})",
                k + 1,
                energies[k],
                k + 2,
                energies[k + 1]
            )));
        }
        let ground_width = energies[3] - energies[0];
        let gap = energies[4] - energies[3];
        if gap <= 5.0 * ground_width {
            return Err(Error::Config(format!(
                "manifold gap {gap} cm⁻¹ is not well separated from the ground-manifold width {ground_width} cm⁻¹"
            )));
        }
        Ok(LevelStructure { energies })
    }

    pub fn energies(&self) -> &[f64; NUM_LEVELS] {
        &self.energies
    }

    /// Energy of `level` (1-based) in cm⁻¹.
    pub fn energy(&self, level: usize) -> f64 {
        self.energies[level - 1]
    }

    /// Angular frequency of every level in rad/s.
    pub fn angular(&self, consts: &PhysicalConstants) -> [f64; NUM_LEVELS] {
        self.energies.map(|e| consts.wavenumber_to_angular(e))
    }

    /// Vacuum wavelength (nm) of the `upper → lower` transition.
    pub fn transition_wavelength(&self, upper: usize, lower: usize) -> f64 {
        wavenumber_to_nm(self.energy(upper) - self.energy(lower))
    }

    /// Boltzmann weights of the excited manifold (levels 5, 6, 7) at `temperature`.
    pub fn excited_occupations(&self, temperature: f64, consts: &PhysicalConstants) -> [f64; 3] {
        let w = self.boltzmann(&EXCITED, temperature, consts);
        [w[0], w[1], w[2]]
    }

    /// Boltzmann weights of the ground manifold (levels 1–4) at `temperature`.
    pub fn ground_occupations(&self, temperature: f64, consts: &PhysicalConstants) -> [f64; 4] {
        let w = self.boltzmann(&GROUND, temperature, consts);
        [w[0], w[1], w[2], w[3]]
    }

    fn boltzmann(&self, levels: &[usize], temperature: f64, consts: &PhysicalConstants) -> Vec<f64> {
        let base = self.energy(levels[0]);
        let beta = consts.beta(temperature);
        let weights: Vec<f64> = levels
            .iter()
            .map(|&k| {
                let gap = consts.wavenumber_to_angular(self.energy(k) - base);
                (-consts.hbar * gap * beta).exp()
            })
            .collect();
        let z: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / z).collect()
    }
}

/// Rates and material constants of the host crystal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// Intra-manifold phonon relaxation rate (s⁻¹).
    pub gamma_ph: f64,
    /// Multi-phonon 5 → 4 decay rate (s⁻¹).
    pub w_nr: f64,
    /// Parasitic background absorption (cm⁻¹).
    pub alpha_imp: f64,
    /// Active-ion density (cm⁻³).
    pub n_ion: f64,
    /// Radiative lifetime of the excited manifold (s).
    pub tau_rad: f64,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        EnvironmentConfig {
            gamma_ph: 1.0e12,
            w_nr: 1.45,
            alpha_imp: 4.0e-4,
            n_ion: 1.45e21,
            tau_rad: 2.0e-3,
        }
    }
}

impl EnvironmentConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma_ph", self.gamma_ph),
            ("w_nr", self.w_nr),
            ("n_ion", self.n_ion),
            ("tau_rad", self.tau_rad),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("environment.{name} must be positive, got {value}")));
            }
        }
        // Zero is allowed here: an impurity-free crystal.
        if !(self.alpha_imp.is_finite() && self.alpha_imp >= 0.0) {
            return Err(Error::Config(format!(
                "environment.alpha_imp must be non-negative, got {}",
                self.alpha_imp
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DipoleUnit {
    #[serde(rename = "C*cm")]
    CoulombCentimetre,
    #[serde(rename = "C*m")]
    CoulombMetre,
}

/// A transition dipole moment kept in the unit it was specified in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleMoment {
    pub value: f64,
    pub unit: DipoleUnit,
}

impl DipoleMoment {
    pub fn coulomb_metres(&self) -> f64 {
        match self.unit {
            DipoleUnit::CoulombCentimetre => self.value * 1.0e-2,
            DipoleUnit::CoulombMetre => self.value,
        }
    }
}

impl Default for DipoleMoment {
    fn default() -> Self {
        DipoleMoment {
            value: 6.6e-31,
            unit: DipoleUnit::CoulombCentimetre,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpConfig {
    /// Pumped ground level `i` of the `i ↔ 5` transition.
    pub lower_level: usize,
    /// Pump intensity j₀ (W/cm²).
    pub intensity: f64,
    pub dipole: DipoleMoment,
}

impl Default for PumpConfig {
    fn default() -> Self {
        PumpConfig {
            lower_level: 2,
            intensity: 1.0e4,
            dipole: DipoleMoment::default(),
        }
    }
}

impl PumpConfig {
    pub fn validate(&self) -> Result<()> {
        if !GROUND.contains(&self.lower_level) {
            return Err(Error::Config(format!(
                "pump.lower_level must be a ground level 1-4, got {}",
                self.lower_level
            )));
        }
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(Error::Config(format!("pump.intensity must be ≥ 0, got {}", self.intensity)));
        }
        if !(self.dipole.value.is_finite() && self.dipole.value > 0.0) {
            return Err(Error::Config(format!("pump.dipole must be positive, got {}", self.dipole.value)));
        }
        Ok(())
    }

    pub fn with_intensity(mut self, intensity: f64) -> Self {
        self.intensity = intensity;
        self
    }
}

/// Mean thermal phonon number 1/(exp(ħω/k_BT) − 1).
pub fn thermal_occupancy(omega: f64, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain(format!("phonon frequency must be positive, got {omega}")));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    let x = consts.hbar * omega / (consts.k_b * temperature);
    Ok(1.0 / x.exp_m1())
}

/// Rabi frequency g = d₀E₀/ħ (rad/s) of the pump, with the field amplitude
/// taken from the intensity as E₀ = sqrt(2 j₀ / (c ε₀)).
pub fn rabi_frequency(pump: &PumpConfig, consts: &PhysicalConstants) -> f64 {
    // W/cm² → W/m²
    let intensity = pump.intensity * 1.0e4;
    let field = (2.0 * intensity / (consts.c * consts.epsilon_0)).sqrt();
    pump.dipole.coulomb_metres() * field / consts.hbar
}
