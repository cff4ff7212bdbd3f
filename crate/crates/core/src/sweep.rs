//! Parameter sweeps over one axis and their CSV/JSON serialization.
//!
//! Points run in parallel; rows are always reported in the order of the axis
//! values, and a failed point records its error instead of aborting the
//! sweep.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cavity::{transfer_function, CavityConfig};
use crate::error::{Error, Result};
use crate::params::GROUND;
use crate::thermo::{PowerBreakdown, Scenario};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Temperature,
    Reflectivity,
    LengthMismatch,
    PumpLevel,
    Intensity,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Temperature => "temperature",
            Axis::Reflectivity => "reflectivity",
            Axis::LengthMismatch => "length_mismatch",
            Axis::PumpLevel => "pump_level",
            Axis::Intensity => "intensity",
        }
    }

    /// Column header of the axis value, with unit.
    pub fn column(&self) -> &'static str {
        match self {
            Axis::Temperature => "temperature_K",
            Axis::Reflectivity => "reflectivity",
            Axis::LengthMismatch => "length_mismatch_nm",
            Axis::PumpLevel => "pump_level",
            Axis::Intensity => "intensity_W_cm2",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "temperature" => Ok(Axis::Temperature),
            "reflectivity" => Ok(Axis::Reflectivity),
            "length_mismatch" => Ok(Axis::LengthMismatch),
            "pump_level" => Ok(Axis::PumpLevel),
            "intensity" => Ok(Axis::Intensity),
            other => Err(Error::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

/// Axis values, either stepped or listed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AxisRange {
    Step { from: f64, to: f64, step: f64 },
    List(Vec<f64>),
}

impl AxisRange {
    pub fn values(&self) -> Result<Vec<f64>> {
        let values = match self {
            AxisRange::Step { from, to, step } => {
                if !(step.is_finite() && *step != 0.0) || !(from.is_finite() && to.is_finite()) {
                    return Err(Error::Config(format!("bad sweep range {from}..{to} step {step}")));
                }
                if (to - from) * step < 0.0 {
                    return Err(Error::Config(format!("step {step} never reaches {to} from {from}")));
                }
                let n = ((to - from) / step + 1e-9).floor() as usize;
                (0..=n).map(|k| from + step * k as f64).collect()
            }
            AxisRange::List(v) => v.clone(),
        };
        if values.is_empty() {
            return Err(Error::Config("sweep range is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite sweep value {v}")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: Axis,
    pub range: AxisRange,
    pub base: Scenario,
    /// Temperature of every point unless the axis is temperature.
    pub temperature: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    #[serde(flatten)]
    pub breakdown: Option<PowerBreakdown>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub version: &'static str,
    pub axis: Axis,
    pub base_temperature: f64,
    pub config_sha256: String,
    pub rows: Vec<SweepRow>,
}

impl SweepSpec {
    /// Scenario and temperature of one sweep point.
    pub fn point(&self, value: f64) -> Result<(Scenario, f64)> {
        let mut s = self.base.clone();
        let mut t = self.temperature;
        match self.axis {
            Axis::Temperature => t = value,
            Axis::Reflectivity => {
                s.cavity = Some(s.cavity.unwrap_or_default().with_reflectivity(value));
            }
            Axis::LengthMismatch => {
                s.cavity = Some(s.cavity.unwrap_or_default().with_mismatch(value));
            }
            Axis::PumpLevel => {
                if value.fract() != 0.0 || !GROUND.contains(&(value as usize)) {
                    return Err(Error::Config(format!("pump level must be one of 1-4, got {value}")));
                }
                s.pump.lower_level = value as usize;
            }
            Axis::Intensity => s = s.with_fixed_intensity(value),
        }
        Ok((s, t))
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let values = spec.range.values()?;
    let rows = values
        .par_iter()
        .map(|&value| {
            let outcome = spec.point(value).and_then(|(s, t)| s.evaluate(t));
            match outcome {
                Ok(b) => SweepRow { value, breakdown: Some(b), error: None },
                Err(e) => SweepRow { value, breakdown: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let mut hasher = Sha256::new();
    hasher.update(spec.base.fingerprint().as_bytes());
    hasher.update(format!("{}|{}", spec.axis.name(), spec.temperature).as_bytes());
    Ok(SweepResult {
        version: VERSION,
        axis: spec.axis,
        base_temperature: spec.temperature,
        config_sha256: hex::encode(hasher.finalize()),
        rows,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

impl SweepResult {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_none())
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# cavicool {}", self.version);
        let _ = writeln!(out, "# config_sha256: {}", self.config_sha256);
        let _ = writeln!(out, "# axis: {}", self.axis.name());
        let _ = writeln!(out, "# base_temperature_K: {}", self.base_temperature);
        let _ = writeln!(
            out,
            "sweep_{},temperature_K,intensity_W_cm2,p_abs_W,p_cool_W,p_emi_W,p_net_W_cm3,eta,balance_residual,error",
            self.axis.column()
        );
        for row in &self.rows {
            match &row.breakdown {
                Some(b) => {
                    let _ = writeln!(
                        out,
                        "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},",
                        row.value, b.temperature, b.intensity, b.p_abs, b.p_cool, b.p_emi, b.p_net, b.eta, b.balance_residual
                    );
                }
                None => {
                    let msg = row.error.as_deref().unwrap_or("");
                    let _ = writeln!(out, "{},,,,,,,,,{}", row.value, csv_field(msg));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// `(λ, Γ/Γ_sp)` rows as CSV.
pub fn emit_transfer_function(cavity: &CavityConfig, grid: &[f64]) -> String {
    let mut out = format!(
        "# cavicool {VERSION}\n# reflectivity: {}\n# length_um: {}\n# length_mismatch_nm: {}\n# diameter_um: {}\nwavelength_nm,total_rate_ratio\n",
        cavity.reflectivity, cavity.length_um, cavity.length_mismatch_nm, cavity.diameter_um
    );
    for (w, r) in transfer_function(cavity, grid) {
        let _ = writeln!(out, "{w},{r}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::CavityResponse;
    use crate::spectra::wavelength_grid;

    fn fixed_base() -> Scenario {
        Scenario::default().with_fixed_intensity(1e4)
    }

    #[test]
    fn step_range_includes_endpoint() {
        let v = AxisRange::Step { from: 78.0, to: 150.0, step: 8.0 }.values().unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(*v.last().unwrap(), 150.0);
        assert!(AxisRange::List(vec![]).values().is_err());
        assert!(AxisRange::Step { from: 1.0, to: 0.0, step: 0.1 }.values().is_err());
    }

    #[test]
    fn axis_names_round_trip() {
        for axis in [Axis::Temperature, Axis::Reflectivity, Axis::LengthMismatch, Axis::PumpLevel, Axis::Intensity] {
            assert_eq!(axis.name().parse::<Axis>().unwrap(), axis);
        }
        assert_eq!("length-mismatch".parse::<Axis>().unwrap(), Axis::LengthMismatch);
        assert!("colour".parse::<Axis>().is_err());
    }

    #[test]
    fn failed_points_are_recorded() {
        let spec = SweepSpec {
            axis: Axis::Temperature,
            range: AxisRange::List(vec![70.0, 100.0]),
            base: fixed_base(),
            temperature: 100.0,
        };
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.failures(), 1);
        assert!(result.rows[0].error.as_ref().unwrap().contains("outside"));
        assert!(result.rows[1].breakdown.is_some());
        let csv = result.to_csv();
        assert!(csv.lines().any(|l| l.starts_with("70,,")));
        let json: serde_json::Value = serde_json::from_str(&result.to_json()).unwrap();
        assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn zero_reflectivity_row_equals_free_space_when_clamped() {
        let spec = SweepSpec {
            axis: Axis::Reflectivity,
            range: AxisRange::List(vec![0.0]),
            base: fixed_base().with_response(CavityResponse::EnhancementOnly),
            temperature: 100.0,
        };
        let row = run_sweep(&spec).unwrap().rows.remove(0).breakdown.unwrap();
        let free = fixed_base().evaluate(100.0).unwrap();
        assert_eq!((row.p_abs, row.p_cool, row.p_emi, row.eta), (free.p_abs, free.p_cool, free.p_emi, free.eta));
    }

    #[test]
    fn permutation_invariance() {
        let values = vec![80.0, 120.0, 100.0];
        let mk = |v: Vec<f64>| SweepSpec {
            axis: Axis::Temperature,
            range: AxisRange::List(v),
            base: fixed_base(),
            temperature: 100.0,
        };
        let a = run_sweep(&mk(values.clone())).unwrap();
        let b = run_sweep(&mk(vec![100.0, 80.0, 120.0])).unwrap();
        for row in &a.rows {
            let other = b.rows.iter().find(|r| r.value == row.value).unwrap();
            assert_eq!(row.breakdown, other.breakdown);
        }
    }

    #[test]
    fn bad_pump_level_value() {
        let spec = SweepSpec {
            axis: Axis::PumpLevel,
            range: AxisRange::List(vec![2.5, 5.0, 4.0]),
            base: fixed_base(),
            temperature: 100.0,
        };
        let r = run_sweep(&spec).unwrap();
        assert_eq!(r.failures(), 2);
        assert!(r.rows[2].error.is_none());
    }

    #[test]
    fn transfer_function_rows() {
        let grid = wavelength_grid(940.0, 1000.0, 0.01).unwrap();
        let csv = emit_transfer_function(&CavityConfig::default(), &grid);
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), grid.len() + 1);

        let rows = transfer_function(&CavityConfig::default(), &grid);
        let maxima: Vec<f64> = rows
            .windows(3)
            .filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1)
            .map(|w| w[1].0)
            .collect();
        assert_eq!(maxima.len(), 1);
        assert!((maxima[0] - 971.7).abs() < 0.1);
    }
}
