use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cavicool::cavity::modify_spectrum;
use cavicool::config::Config;
use cavicool::spectra::{fit_lines, load_spectrum, synthesize_spectrum, wavelength_grid, FitOptions, LineFit, LineSet};
use cavicool::sweep::{emit_transfer_function, run_sweep, VERSION};
use cavicool::{Axis, AxisRange, CavityResponse, IntensityMode, LineTable, Scenario, SweepSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Exit status when some sweep points or spectra failed.
const PARTIAL_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(name = "cavicool", version, about = "Anti-Stokes cooling of Yb:YLF in a Fabry-Perot microcavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Io {
    /// TOML or JSON run configuration (JSON when the name ends in .json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for sweeps (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Command-line values that take precedence over the config file.
#[derive(Args)]
struct Overrides {
    /// Operating temperature (K).
    #[arg(long, global = true)]
    temperature: Option<f64>,
    /// Lower pump level, 1-4.
    #[arg(long, global = true)]
    pump_level: Option<usize>,
    /// Fixed pump intensity (W/cm²); switches off the maximum-cooling scan.
    #[arg(long, global = true)]
    intensity: Option<f64>,
    /// Report the point of maximum net cooling power.
    #[arg(long, global = true, conflicts_with = "intensity")]
    max_cooling: bool,
    /// Line table CSV replacing the built-in one.
    #[arg(long, global = true)]
    line_table: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha_imp: Option<f64>,
    #[arg(long, global = true)]
    gamma_ph: Option<f64>,
    #[arg(long, global = true)]
    w_nr: Option<f64>,
    /// Enable the cavity. Any cavity geometry flag also enables it.
    #[arg(long, global = true, conflicts_with = "no_cavity")]
    cavity: bool,
    #[arg(long, global = true)]
    no_cavity: bool,
    #[arg(long, global = true)]
    reflectivity: Option<f64>,
    #[arg(long, global = true)]
    length_um: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    length_mismatch: Option<f64>,
    #[arg(long, global = true)]
    diameter_um: Option<f64>,
    #[arg(long, global = true, value_enum)]
    response: Option<Response>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Response {
    Full,
    EnhancementOnly,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state and power breakdown at one operating point.
    Steady {
        /// Also write the density matrix as CSV (row,col,re,im).
        #[arg(long)]
        rho: Option<PathBuf>,
    },
    /// Power breakdown along one parameter axis.
    Sweep {
        /// temperature, reflectivity, length-mismatch, pump-level or intensity.
        axis: Axis,
        #[arg(long, requires_all = ["to", "step"], conflicts_with = "values", allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
    },
    /// Emission cross section synthesized from the line table.
    Spectrum {
        #[arg(long, default_value_t = 930.0)]
        from: f64,
        #[arg(long, default_value_t = 1070.0)]
        to: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
    },
    /// Cavity transfer function Γ/Γ_sp.
    Transfer {
        #[arg(long, default_value_t = 900.0)]
        from: f64,
        #[arg(long, default_value_t = 1100.0)]
        to: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Fit the twelve Lorentzian lines to measured spectra.
    FitLines {
        #[arg(required = true)]
        spectra: Vec<PathBuf>,
        /// Starting FWHM of every line (nm).
        #[arg(long, default_value_t = 2.0)]
        initial_fwhm: f64,
        /// Do not fit a constant background.
        #[arg(long)]
        no_baseline: bool,
    },
}

impl Overrides {
    fn apply(&self, config: &mut Config) {
        if let Some(t) = self.temperature {
            config.temperature = t;
        }
        if let Some(level) = self.pump_level {
            config.pump.lower_level = level;
        }
        if let Some(j) = self.intensity {
            config.pump.intensity = j;
            config.intensity_mode = IntensityMode::Fixed;
        }
        if self.max_cooling {
            config.intensity_mode = IntensityMode::MaxCooling;
        }
        if let Some(path) = &self.line_table {
            config.line_table = Some(path.clone());
        }
        if let Some(v) = self.alpha_imp {
            config.environment.alpha_imp = v;
        }
        if let Some(v) = self.gamma_ph {
            config.environment.gamma_ph = v;
        }
        if let Some(v) = self.w_nr {
            config.environment.w_nr = v;
        }
        let c = &mut config.cavity;
        let geometry = [self.reflectivity, self.length_um, self.length_mismatch, self.diameter_um];
        if self.cavity || geometry.iter().any(Option::is_some) || self.response.is_some() {
            c.enabled = true;
        }
        if self.no_cavity {
            c.enabled = false;
        }
        if let Some(v) = self.reflectivity {
            c.reflectivity = v;
        }
        if let Some(v) = self.length_um {
            c.length_um = v;
        }
        if let Some(v) = self.length_mismatch {
            c.length_mismatch_nm = v;
        }
        if let Some(v) = self.diameter_um {
            c.diameter_um = v;
        }
        if let Some(r) = self.response {
            c.response = match r {
                Response::Full => CavityResponse::Full,
                Response::EnhancementOnly => CavityResponse::EnhancementOnly,
            };
        }
    }
}

fn provenance(sha: &str) -> String {
    format!("# cavicool {VERSION}\n# config_sha256: {sha}\n")
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct SteadyReport<'a> {
    version: &'static str,
    config_sha256: &'a str,
    breakdown: &'a cavicool::PowerBreakdown,
    populations: Vec<f64>,
}

fn steady(config: &Config, io: &Io, rho_path: &Option<PathBuf>) -> Result<u8> {
    let scenario = config.scenario()?;
    let t = config.temperature;
    let b = scenario.evaluate(t)?;
    let rates = scenario.rates(t)?;
    let (rho, _) = scenario.solve_point(t, &rates, b.intensity)?;
    if let Some(path) = rho_path {
        let text = provenance(&b.fingerprint) + &rho.to_csv();
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let text = match io.format {
        Format::Csv => {
            let mut s = provenance(&b.fingerprint);
            s.push_str("temperature_K,intensity_W_cm2,p_abs_W,p_cool_W,p_emi_W,p_net_W_cm3,eta,balance_residual\n");
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                b.temperature, b.intensity, b.p_abs, b.p_cool, b.p_emi, b.p_net, b.eta, b.balance_residual
            );
            s
        }
        Format::Json => to_json(&SteadyReport {
            version: VERSION,
            config_sha256: &b.fingerprint,
            breakdown: &b,
            populations: rho.populations(),
        }),
    };
    write_output(&io.out, &text)?;
    Ok(0)
}

fn sweep(config: &Config, io: &Io, axis: Axis, range: AxisRange) -> Result<u8> {
    let spec = SweepSpec {
        axis,
        range,
        base: config.scenario()?,
        temperature: config.temperature,
    };
    let result = run_sweep(&spec)?;
    let text = match io.format {
        Format::Csv => result.to_csv(),
        Format::Json => {
            let mut s = result.to_json();
            s.push('\n');
            s
        }
    };
    write_output(&io.out, &text)?;
    for row in result.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("{} = {}: {}", axis.name(), row.value, row.error.as_deref().unwrap_or_default());
    }
    Ok(if result.all_ok() { 0 } else { PARTIAL_FAILURE })
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    version: &'static str,
    config_sha256: &'a str,
    temperature_k: f64,
    cavity: bool,
    wavelength_nm: &'a [f64],
    cross_section_cm2: &'a [f64],
}

fn spectrum(config: &Config, io: &Io, from: f64, to: f64, step: f64) -> Result<u8> {
    let scenario = config.scenario()?;
    let t = config.temperature;
    let grid = wavelength_grid(from, to, step)?;
    let mut s = synthesize_spectrum(t, &scenario.lines.at(t)?, &grid)?;
    if let Some(c) = &scenario.cavity {
        s = modify_spectrum(&s, c)?;
    }
    let sha = scenario.fingerprint();
    let text = match io.format {
        Format::Csv => provenance(&sha) + &s.to_text(),
        Format::Json => to_json(&SpectrumReport {
            version: VERSION,
            config_sha256: &sha,
            temperature_k: t,
            cavity: scenario.cavity.is_some(),
            wavelength_nm: s.wavelengths(),
            cross_section_cm2: s.cross_sections(),
        }),
    };
    write_output(&io.out, &text)?;
    Ok(0)
}

#[derive(Serialize)]
struct TransferReport<'a> {
    version: &'static str,
    config_sha256: &'a str,
    cavity: cavicool::CavityConfig,
    rows: Vec<(f64, f64)>,
}

fn transfer(config: &Config, io: &Io, from: f64, to: f64, step: f64) -> Result<u8> {
    let cavity = config.cavity.geometry();
    cavity.validate()?;
    if let Some(w) = cavity.validity_warning() {
        eprintln!("warning: {w}");
    }
    let grid = wavelength_grid(from, to, step)?;
    let sha = Scenario { cavity: Some(cavity), ..config.scenario()? }.fingerprint();
    let text = match io.format {
        Format::Csv => format!("# config_sha256: {sha}\n") + &emit_transfer_function(&cavity, &grid),
        Format::Json => to_json(&TransferReport {
            version: VERSION,
            config_sha256: &sha,
            cavity,
            rows: cavicool::cavity::transfer_function(&cavity, &grid),
        }),
    };
    write_output(&io.out, &text)?;
    Ok(0)
}

fn fit(config: &Config, io: &Io, paths: &[PathBuf], options: FitOptions) -> Result<u8> {
    let mut fits: Vec<LineFit> = Vec::new();
    let mut failed = 0;
    for path in paths {
        let outcome = load_spectrum(path).and_then(|s| fit_lines(&s, &config.levels, &options));
        match outcome {
            Ok(f) => fits.push(f),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                failed += 1;
            }
        }
    }
    if fits.is_empty() {
        bail!("no spectrum could be fitted");
    }
    fits.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
    let text = match io.format {
        Format::Csv => {
            let sets = fits
                .iter()
                .map(|f| LineSet::new(f.temperature, f.lines.clone()))
                .collect::<cavicool::Result<Vec<_>>>()?;
            let mut s = format!("# cavicool {VERSION}\n");
            for f in &fits {
                let _ = writeln!(
                    s,
                    "# T = {} K: residual_norm {:e}, baseline {:e}, iterations {}",
                    f.temperature, f.residual_norm, f.baseline, f.iterations
                );
            }
            s + &LineTable::new(sets)?.to_csv()
        }
        Format::Json => to_json(&fits),
    };
    write_output(&io.out, &text)?;
    Ok(if failed == 0 { 0 } else { PARTIAL_FAILURE })
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.io.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut config = match &cli.io.config {
        Some(path) => Config::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => Config::default(),
    };
    cli.overrides.apply(&mut config);
    if let Some(w) = config.cavity.enabled.then(|| config.cavity.geometry().validity_warning()).flatten() {
        eprintln!("warning: {w}");
    }

    match &cli.command {
        Command::Steady { rho } => steady(&config, &cli.io, rho),
        Command::Sweep { axis, from, to, step, values } => {
            let range = match (values, from, to, step) {
                (Some(v), ..) => AxisRange::List(v.clone()),
                (None, Some(from), Some(to), Some(step)) => AxisRange::Step { from: *from, to: *to, step: *step },
                _ => bail!("give either --values or all of --from, --to, --step"),
            };
            sweep(&config, &cli.io, *axis, range)
        }
        Command::Spectrum { from, to, step } => spectrum(&config, &cli.io, *from, *to, *step),
        Command::Transfer { from, to, step } => transfer(&config, &cli.io, *from, *to, *step),
        Command::FitLines { spectra, initial_fwhm, no_baseline } => {
            let options = FitOptions {
                initial_fwhm: *initial_fwhm,
                baseline: !no_baseline,
                ..FitOptions::default()
            };
            fit(&config, &cli.io, spectra, options)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
