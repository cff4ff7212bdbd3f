//! Steady-state model of anti-Stokes laser cooling in Yb³⁺:YLF, with
//! Purcell-modified radiative rates from a Fabry-Pérot microcavity.
//!
//! The pipeline for one operating point is
//! line table → [`spectra::extract_rates`] → [`cavity::modify_rates`] →
//! [`dynamics::build_generator`] → [`dynamics::steady_state`] →
//! [`thermo::power_breakdown`]. [`thermo::Scenario`] bundles the inputs and
//! [`sweep::run_sweep`] repeats it along one parameter axis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod config;
pub mod constants;
mod dd;
pub mod dynamics;
pub mod error;
pub mod params;
mod quadrature;
pub mod spectra;
pub mod sweep;
pub mod thermo;

pub use cavity::{CavityConfig, CavityResponse};
pub use config::Config;
pub use constants::{PhysicalConstants, CODATA};
pub use dynamics::{DensityMatrix, LindbladGenerator, SteadyState};
pub use error::{Error, Result};
pub use params::{DipoleMoment, DipoleUnit, EnvironmentConfig, LevelStructure, PumpConfig};
pub use spectra::{EmissionSpectrum, LineInterpolator, LineTable, RateTable, TransitionLine};
pub use sweep::{Axis, AxisRange, SweepResult, SweepSpec};
pub use thermo::{IntensityMode, IntensityScan, PowerBreakdown, Scenario};
