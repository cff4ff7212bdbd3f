//! Run configuration read from TOML or JSON.
//!
//! Every section and key is optional; missing values take the defaults
//! below. A TOML example with all keys:
//!
//! ```toml
//! temperature = 100.0            # K, operating point for single-point runs
//! intensity_mode = "max-cooling" # or "fixed" (uses pump.intensity)
//! line_table = "lines.csv"       # optional; relative to this file
//!
//! [levels]
//! energies_cm = [0, 216, 246, 479, 10291, 10413, 10554]
//!
//! [environment]
//! gamma_ph = 1e12
//! w_nr = 1.45
//! alpha_imp = 4e-4
//! n_ion = 1.45e21
//! tau_rad = 2e-3
//!
//! [pump]
//! lower_level = 2
//! intensity = 1e4                # W/cm²
//! dipole = { value = 6.6e-31, unit = "C*cm" }
//!
//! [scan]
//! min = 1e2
//! max = 1e7
//! points = 25
//! tolerance = 1e-4
//!
//! [cavity]
//! enabled = false
//! reflectivity = 0.98
//! length_um = 7.7736
//! length_mismatch_nm = 0.0
//! diameter_um = 3.11
//! response = "full"              # or "enhancement-only"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cavity::{CavityConfig, CavityResponse};
use crate::constants::CODATA;
use crate::error::{Error, Result};
use crate::params::{EnvironmentConfig, LevelStructure, PumpConfig};
use crate::spectra::{LineInterpolator, LineTable};
use crate::thermo::{IntensityMode, IntensityScan, Scenario};

/// Fitted line centers must lie this close (nm) to the level-energy values.
pub const LINE_CENTER_TOLERANCE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavitySection {
    pub enabled: bool,
    pub reflectivity: f64,
    pub length_um: f64,
    pub length_mismatch_nm: f64,
    pub diameter_um: f64,
    pub response: CavityResponse,
}

impl Default for CavitySection {
    fn default() -> Self {
        let c = CavityConfig::default();
        CavitySection {
            enabled: false,
            reflectivity: c.reflectivity,
            length_um: c.length_um,
            length_mismatch_nm: c.length_mismatch_nm,
            diameter_um: c.diameter_um,
            response: CavityResponse::Full,
        }
    }
}

impl CavitySection {
    pub fn geometry(&self) -> CavityConfig {
        CavityConfig {
            reflectivity: self.reflectivity,
            length_um: self.length_um,
            length_mismatch_nm: self.length_mismatch_nm,
            diameter_um: self.diameter_um,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub temperature: f64,
    pub intensity_mode: IntensityMode,
    pub line_table: Option<PathBuf>,
    pub levels: LevelStructure,
    pub environment: EnvironmentConfig,
    pub pump: PumpConfig,
    pub scan: IntensityScan,
    pub cavity: CavitySection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            temperature: 100.0,
            intensity_mode: IntensityMode::MaxCooling,
            line_table: None,
            levels: LevelStructure::default(),
            environment: EnvironmentConfig::default(),
            pump: PumpConfig::default(),
            scan: IntensityScan::default(),
            cavity: CavitySection::default(),
        }
    }
}

impl Config {
    /// Reads `path` as JSON when it ends in `.json`, as TOML otherwise.
    /// A relative `line_table` is resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut config: Config = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        if let Some(table) = &config.line_table {
            if table.is_relative() {
                if let Some(dir) = path.parent() {
                    config.line_table = Some(dir.join(table));
                }
            }
        }
        Ok(config)
    }

    pub fn cavity(&self) -> Option<CavityConfig> {
        self.cavity.enabled.then(|| self.cavity.geometry())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature must be positive, got {}", self.temperature)));
        }
        self.environment.validate()?;
        self.pump.validate()?;
        self.scan.validate()?;
        if self.cavity.enabled {
            self.cavity.geometry().validate()?;
        }
        Ok(())
    }

    pub fn line_table(&self) -> Result<LineTable> {
        match &self.line_table {
            Some(path) => LineTable::load(path),
            None => Ok(LineTable::builtin()),
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.validate()?;
        let table = self.line_table()?;
        table.validate(&self.levels, LINE_CENTER_TOLERANCE)?;
        Ok(Scenario {
            levels: self.levels.clone(),
            environment: self.environment,
            pump: self.pump,
            cavity: self.cavity(),
            response: self.cavity.response,
            intensity_mode: self.intensity_mode,
            scan: self.scan,
            constants: CODATA,
            lines: LineInterpolator::new(table)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn empty_file_gives_defaults() {
        let config: Config = toml::from_str("").unwrap();
        assert_eq!(config, Config::default());
        config.scenario().unwrap();
    }

    #[test]
    fn partial_sections_and_unknown_keys() {
        let config: Config = toml::from_str("[pump]\nlower_level = 4\n[cavity]\nenabled = true\nreflectivity = 0.99\n").unwrap();
        assert_eq!(config.pump.lower_level, 4);
        assert_eq!(config.pump.intensity, PumpConfig::default().intensity);
        assert_eq!(config.cavity().unwrap().reflectivity, 0.99);
        assert!(toml::from_str::<Config>("[pump]\nlevel = 4\n").is_err());
    }

    #[test]
    fn json_and_toml_agree() {
        let config = Config {
            temperature: 123.0,
            ..Config::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let json_path = dir.path().join("c.json");
        let toml_path = dir.path().join("c.toml");
        fs::File::create(&json_path)
            .unwrap()
            .write_all(serde_json::to_string(&config).unwrap().as_bytes())
            .unwrap();
        fs::File::create(&toml_path)
            .unwrap()
            .write_all(toml::to_string(&config).unwrap().as_bytes())
            .unwrap();
        assert_eq!(Config::load(&json_path).unwrap(), config);
        assert_eq!(Config::load(&toml_path).unwrap(), config);
    }

    #[test]
    fn dipole_unit_is_explicit() {
        let c: Config = toml::from_str("[pump]\ndipole = { value = 6.6e-33, unit = \"C*m\" }\n").unwrap();
        assert_eq!(c.pump.dipole.coulomb_metres(), 6.6e-33);
        assert!(toml::from_str::<Config>("[pump]\ndipole = { value = 1.0, unit = \"D\" }\n").is_err());
    }

    #[test]
    fn line_table_path_is_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("lines.csv"), LineTable::builtin().to_csv()).unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "line_table = \"lines.csv\"\n").unwrap();
        let config = Config::load(&path).unwrap();
        assert_eq!(config.line_table().unwrap(), LineTable::builtin());
    }

    #[test]
    fn mismatched_levels_are_rejected() {
        let config = Config {
            levels: LevelStructure::new([0.0, 216.0, 246.0, 479.0, 10391.0, 10413.0, 10554.0]).unwrap(),
            ..Default::default()
        };
        assert!(matches!(config.scenario(), Err(Error::Config(_))));
    }
}
