//! Steady-state energy currents, net cooling power and cooling efficiency.
//!
//! Sign conventions, all powers per ion unless noted:
//! - `p_abs`: power taken from the pump field.
//! - `p_emi`: power carried away by spontaneous photons.
//! - `p_cool`: heat drawn from the lattice through the phonon and
//!   non-radiative channels, positive when the crystal cools.
//!
//! Energy conservation at steady state reads `p_abs + p_cool = p_emi`.
//! Every current is evaluated with the lab-frame level energies; the pumped
//! coherence is stationary in the rotating frame, so using it with bare
//! energies gives the same absorbed power as a lab-frame calculation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use twofloat::TwoFloat;

use crate::cavity::{modify_rates, CavityConfig, CavityResponse};
use crate::constants::{PhysicalConstants, CODATA};
use crate::dd::Dd;
use crate::dynamics::{build_generator, steady_state, Channel, DensityMatrix, LindbladGenerator};
use crate::error::{Error, Result};
use crate::params::{EnvironmentConfig, LevelStructure, PumpConfig};
use crate::spectra::{extract_rates, LineInterpolator, LineTable, RateTable};

/// Relative energy-balance residual above which a state is not accepted as
/// stationary.
pub const BALANCE_REJECT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerBreakdown {
    pub temperature: f64,
    /// Pump intensity j₀ (W/cm²).
    pub intensity: f64,
    /// W per ion.
    pub p_abs: f64,
    /// W per ion.
    pub p_cool: f64,
    /// W per ion.
    pub p_emi: f64,
    /// Net volumetric cooling power (W/cm³).
    pub p_net: f64,
    /// `p_net / (n_ion·p_abs)`; NaN when nothing is absorbed.
    pub eta: f64,
    /// `|p_abs + p_cool − p_emi| / max(|p_abs|, |p_emi|)`.
    pub balance_residual: f64,
    pub fingerprint: String,
}

/// Energy currents of a stationary state of `gen`.
pub fn power_breakdown(
    rho: &DensityMatrix,
    gen: &LindbladGenerator,
    env: &EnvironmentConfig,
    pump: &PumpConfig,
    temperature: f64,
    consts: &PhysicalConstants,
) -> Result<PowerBreakdown> {
    let w = gen.bare_energies();
    let zero = TwoFloat::from(0.0);

    let mut absorbed = zero;
    if let Some(d) = gen.drive() {
        // d/dt ρ_uu = 2g·Im ρ_lu from the drive; ρ_ll loses the same amount.
        let transfer = rho.entry(d.lower, d.upper).im * (2.0 * d.rabi);
        absorbed = transfer * w[d.upper] - transfer * w[d.lower];
    }

    let (mut lattice, mut emitted) = (zero, zero);
    for j in gen.jumps() {
        let flux: Dd = rho.entry(j.from, j.from).scale(j.rate);
        let gain = flux.re * w[j.to] - flux.re * w[j.from];
        match j.channel {
            Channel::Phonon | Channel::NonRadiative => lattice += gain,
            Channel::Spontaneous => emitted -= gain,
        }
    }

    let imbalance = f64::from(absorbed + lattice - emitted).abs();
    let (p_abs, p_cool, p_emi) = (
        consts.hbar * f64::from(absorbed),
        consts.hbar * f64::from(lattice),
        consts.hbar * f64::from(emitted),
    );
    let scale = f64::from(absorbed).abs().max(f64::from(emitted).abs());
    let balance_residual = if scale > 0.0 { imbalance / scale } else { 0.0 };
    if balance_residual > BALANCE_REJECT {
        return Err(Error::NotSteady(balance_residual));
    }

    let p_net = env.n_ion * p_cool - env.alpha_imp * pump.intensity;
    let eta = if p_abs != 0.0 { p_net / (env.n_ion * p_abs) } else { f64::NAN };
    Ok(PowerBreakdown {
        temperature,
        intensity: pump.intensity,
        p_abs,
        p_cool,
        p_emi,
        p_net,
        eta,
        balance_residual,
        fingerprint: String::new(),
    })
}

/// Logarithmic pump-intensity scan used to locate maximum net cooling power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntensityScan {
    /// W/cm².
    pub min: f64,
    /// W/cm².
    pub max: f64,
    pub points: usize,
    /// Golden-section stopping width in log10(j₀).
    pub tolerance: f64,
}

impl Default for IntensityScan {
    fn default() -> Self {
        IntensityScan {
            min: 1e2,
            max: 1e7,
            points: 25,
            tolerance: 1e-4,
        }
    }
}

impl IntensityScan {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) {
            return Err(Error::Config(format!("intensity scan bounds {}..{} are invalid", self.min, self.max)));
        }
        if self.points < 3 {
            return Err(Error::Config(format!("intensity scan needs at least 3 points, got {}", self.points)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("intensity scan tolerance must be positive".into()));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.min.log10(), self.max.log10());
        let n = self.points - 1;
        (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
    }
}

/// How the pump intensity of an operating point is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntensityMode {
    /// Use `pump.intensity` as given.
    Fixed,
    /// Scan j₀ and report the point of maximum net cooling power.
    #[default]
    MaxCooling,
}

/// Everything needed to evaluate the cooling efficiency at a temperature.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub levels: LevelStructure,
    pub environment: EnvironmentConfig,
    pub pump: PumpConfig,
    pub cavity: Option<CavityConfig>,
    pub response: CavityResponse,
    pub intensity_mode: IntensityMode,
    pub scan: IntensityScan,
    pub constants: PhysicalConstants,
    pub lines: LineInterpolator,
}

#[derive(Serialize)]
struct ScenarioKey<'a> {
    levels: &'a LevelStructure,
    environment: &'a EnvironmentConfig,
    pump: &'a PumpConfig,
    cavity: &'a Option<CavityConfig>,
    response: CavityResponse,
    intensity_mode: IntensityMode,
    scan: &'a IntensityScan,
    constants: &'a PhysicalConstants,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            levels: LevelStructure::default(),
            environment: EnvironmentConfig::default(),
            pump: PumpConfig::default(),
            cavity: None,
            response: CavityResponse::Full,
            intensity_mode: IntensityMode::MaxCooling,
            scan: IntensityScan::default(),
            constants: CODATA,
            lines: LineInterpolator::new(LineTable::builtin()).expect("builtin table spans several temperatures"),
        }
    }
}

impl Scenario {
    pub fn with_pump_level(mut self, lower_level: usize) -> Self {
        self.pump.lower_level = lower_level;
        self
    }

    pub fn with_cavity(mut self, cavity: Option<CavityConfig>) -> Self {
        self.cavity = cavity;
        self
    }

    pub fn with_response(mut self, response: CavityResponse) -> Self {
        self.response = response;
        self
    }

    pub fn with_fixed_intensity(mut self, intensity: f64) -> Self {
        self.pump.intensity = intensity;
        self.intensity_mode = IntensityMode::Fixed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.environment.validate()?;
        self.pump.validate()?;
        self.scan.validate()?;
        if let Some(c) = &self.cavity {
            c.validate()?;
        }
        Ok(())
    }

    /// SHA-256 over the scenario parameters and the line table, hex encoded.
    pub fn fingerprint(&self) -> String {
        let key = ScenarioKey {
            levels: &self.levels,
            environment: &self.environment,
            pump: &self.pump,
            cavity: &self.cavity,
            response: self.response,
            intensity_mode: self.intensity_mode,
            scan: &self.scan,
            constants: &self.constants,
        };
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&key).expect("plain data serializes"));
        hasher.update(self.lines.table().to_csv().as_bytes());
        hex::encode(hasher.finalize())
    }

    /// Free-space rates at `temperature`, cavity-modified when a cavity is set.
    pub fn rates(&self, temperature: f64) -> Result<RateTable> {
        let lines = self.lines.at(temperature)?;
        let free = extract_rates(&lines, temperature, &self.environment, &self.levels, &self.constants)?;
        match &self.cavity {
            Some(c) => modify_rates(&free, &lines, c, self.response),
            None => Ok(free),
        }
    }

    /// Steady state and breakdown at a given temperature and pump intensity.
    pub fn solve_point(&self, temperature: f64, rates: &RateTable, intensity: f64) -> Result<(DensityMatrix, PowerBreakdown)> {
        let pump = self.pump.with_intensity(intensity);
        let gen = build_generator(&self.levels, &self.environment, &pump, rates, temperature, &self.constants)?;
        let rho = steady_state(&gen)?.rho;
        let breakdown = power_breakdown(&rho, &gen, &self.environment, &pump, temperature, &self.constants)?;
        Ok((rho, breakdown))
    }

    /// Breakdown at `temperature` with the intensity chosen by `intensity_mode`.
    pub fn evaluate(&self, temperature: f64) -> Result<PowerBreakdown> {
        self.validate()?;
        let rates = self.rates(temperature)?;
        let mut best = match self.intensity_mode {
            IntensityMode::Fixed => self.solve_point(temperature, &rates, self.pump.intensity)?.1,
            IntensityMode::MaxCooling => self.maximize_net_power(temperature, &rates)?,
        };
        best.fingerprint = self.fingerprint();
        Ok(best)
    }

    fn maximize_net_power(&self, temperature: f64, rates: &RateTable) -> Result<PowerBreakdown> {
        let eval = |x: f64| self.solve_point(temperature, rates, 10f64.powf(x)).map(|r| r.1);
        let grid = self.scan.grid();
        let mut samples = Vec::with_capacity(grid.len());
        for &x in &grid {
            samples.push(eval(x)?);
        }
        let k = samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.p_net.total_cmp(&b.1.p_net))
            .map(|(k, _)| k)
            .expect("non-empty grid");
        let (mut lo, mut hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);

        // Golden-section search for the maximum of p_net in log10(j₀).
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let mut f1 = eval(x1)?;
        let mut f2 = eval(x2)?;
        while hi - lo > self.scan.tolerance {
            if f1.p_net >= f2.p_net {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = eval(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = eval(x2)?;
            }
        }
        Ok([samples.swap_remove(k), f1, f2]
            .into_iter()
            .max_by(|a, b| a.p_net.total_cmp(&b.p_net))
            .expect("three candidates"))
    }
}

/// Efficiency at maximum cooling power (or at the fixed intensity) for each
/// temperature, in input order.
pub fn efficiency_vs_temperature(temperatures: &[f64], scenario: &Scenario) -> Result<Vec<PowerBreakdown>> {
    temperatures.par_iter().map(|&t| scenario.evaluate(t)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct InhibitionComparison {
    pub with_inhibition: Vec<PowerBreakdown>,
    pub enhancement_only: Vec<PowerBreakdown>,
    /// η_with / η_enhancement-only per temperature.
    pub ratio: Vec<f64>,
}

impl InhibitionComparison {
    /// Relative improvement η_with/η_enhancement-only − 1.
    pub fn improvement(&self) -> Vec<f64> {
        self.ratio.iter().map(|r| r - 1.0).collect()
    }
}

/// Efficiencies with the full cavity response and with suppression clamped
/// away (Γ/Γ_sp replaced by max(Γ/Γ_sp, 1)).
pub fn inhibition_comparison(temperatures: &[f64], scenario: &Scenario) -> Result<InhibitionComparison> {
    if scenario.cavity.is_none() {
        return Err(Error::Config("inhibition comparison needs a cavity".into()));
    }
    let full = scenario.clone().with_response(CavityResponse::Full);
    let clamped = scenario.clone().with_response(CavityResponse::EnhancementOnly);
    let with_inhibition = efficiency_vs_temperature(temperatures, &full)?;
    let enhancement_only = efficiency_vs_temperature(temperatures, &clamped)?;
    let ratio = with_inhibition
        .iter()
        .zip(&enhancement_only)
        .map(|(a, b)| a.eta / b.eta)
        .collect();
    Ok(InhibitionComparison {
        with_inhibition,
        enhancement_only,
        ratio,
    })
}
