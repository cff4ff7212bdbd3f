//! Emission spectra, Lorentzian transition lines and free-space radiative
//! rates.
//!
//! Spectrum files are plain text: `#`-prefixed metadata lines (one of which
//! must be `# temperature_K: <value>`) followed by two columns, wavelength in
//! nm and cross section in cm², separated by whitespace or a comma. Line
//! tables are CSV with the header `T,upper,lower,center_nm,fwhm_nm,area`.

mod fit;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::params::{EnvironmentConfig, LevelStructure, EXCITED, GROUND};

pub use fit::{fit_lines, FitOptions, LineFit};

/// The twelve radiative transitions `(upper, lower)` in canonical order.
pub fn transitions() -> impl Iterator<Item = (usize, usize)> {
    EXCITED
        .into_iter()
        .flat_map(|upper| GROUND.into_iter().map(move |lower| (upper, lower)))
}

pub const NUM_TRANSITIONS: usize = 12;

fn transition_index(upper: usize, lower: usize) -> Option<usize> {
    if EXCITED.contains(&upper) && GROUND.contains(&lower) {
        Some((upper - 5) * 4 + (lower - 1))
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmissionSpectrum {
    temperature: f64,
    wavelengths: Vec<f64>,
    cross_sections: Vec<f64>,
}

impl EmissionSpectrum {
    pub fn new(temperature: f64, wavelengths: Vec<f64>, cross_sections: Vec<f64>) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Domain(format!("spectrum temperature must be positive, got {temperature}")));
        }
        if wavelengths.len() != cross_sections.len() {
            return Err(Error::Domain(format!(
                "{} wavelengths but {} cross sections",
                wavelengths.len(),
                cross_sections.len()
            )));
        }
        if let Some(k) = wavelengths.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Domain(format!("sample {k}: wavelength must be positive")));
        }
        if let Some(k) = wavelengths.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Domain(format!("sample {}: wavelengths are not strictly increasing", k + 1)));
        }
        if let Some(k) = cross_sections.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Domain(format!("sample {k}: cross section must be non-negative")));
        }
        Ok(EmissionSpectrum {
            temperature,
            wavelengths,
            cross_sections,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn cross_sections(&self) -> &[f64] {
        &self.cross_sections
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.wavelengths.iter().copied().zip(self.cross_sections.iter().copied())
    }

    pub fn covers(&self, wavelength: f64) -> bool {
        match (self.wavelengths.first(), self.wavelengths.last()) {
            (Some(&lo), Some(&hi)) => lo <= wavelength && wavelength <= hi,
            _ => false,
        }
    }

    /// Applies `f(λ, σ)` pointwise, keeping the grid.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let cross_sections = self.samples().map(|(w, s)| f(w, s)).collect();
        EmissionSpectrum::new(self.temperature, self.wavelengths.clone(), cross_sections)
    }

    /// Trapezoid-rule integral of the cross section over wavelength (cm²·nm).
    pub fn integrated_area(&self) -> f64 {
        self.wavelengths
            .windows(2)
            .zip(self.cross_sections.windows(2))
            .map(|(w, s)| 0.5 * (w[1] - w[0]) * (s[0] + s[1]))
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# temperature_K: {}\n", self.temperature);
        for (w, s) in self.samples() {
            let _ = writeln!(out, "{w} {s:e}");
        }
        out
    }
}

/// Parses the spectrum file format; `origin` is used in error messages only.
pub fn parse_spectrum(text: &str, origin: &Path) -> Result<EmissionSpectrum> {
    let mut temperature = None;
    let mut wavelengths = Vec::new();
    let mut cross_sections = Vec::new();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let invalid = |line: usize, msg: String| Error::Validation {
        path: origin.to_path_buf(),
        line,
        msg,
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((key, value)) = meta.split_once(':') {
                if key.trim() == "temperature_K" {
                    let t: f64 = value
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad temperature `{}`", value.trim())))?;
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(invalid(line_no, format!("temperature must be positive, got {t}")));
                    }
                    temperature = Some(t);
                }
            }
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(parse_err(line_no, format!("expected 2 columns, found {}", fields.len())));
        }
        let w: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad wavelength `{}`", fields[0])))?;
        let s: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad cross section `{}`", fields[1])))?;
        if !(w.is_finite() && w > 0.0) {
            return Err(invalid(line_no, format!("wavelength must be positive, got {w}")));
        }
        if !(s.is_finite() && s >= 0.0) {
            return Err(invalid(line_no, format!("negative cross section {s}")));
        }
        if let Some(&prev) = wavelengths.last() {
            if w <= prev {
                return Err(invalid(line_no, format!("wavelength {w} does not increase (previous {prev})")));
            }
        }
        wavelengths.push(w);
        cross_sections.push(s);
    }

    let temperature = temperature.ok_or_else(|| Error::MissingHeader(origin.to_path_buf()))?;
    EmissionSpectrum::new(temperature, wavelengths, cross_sections)
}

pub fn load_spectrum(path: impl AsRef<Path>) -> Result<EmissionSpectrum> {
    let path = path.as_ref();
    parse_spectrum(&fs::read_to_string(path)?, path)
}

pub fn save_spectrum(spectrum: &EmissionSpectrum, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, spectrum.to_text())?;
    Ok(())
}

/// Evenly spaced grid from `from` to `to` inclusive (when `to` lands on the
/// grid within rounding).
pub fn wavelength_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && to > from && step.is_finite()) {
        return Err(Error::Domain(format!("bad grid {from}..{to} step {step}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| from + step * k as f64).collect())
}

/// One Lorentzian emission line of an `upper → lower` transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionLine {
    pub upper: usize,
    pub lower: usize,
    /// Line center (nm).
    pub center: f64,
    /// Full width at half maximum (nm).
    pub fwhm: f64,
    /// Integrated cross section (cm²·nm).
    pub area: f64,
}

impl TransitionLine {
    pub fn profile(&self, wavelength: f64) -> f64 {
        let half = 0.5 * self.fwhm;
        let d = wavelength - self.center;
        self.area / PI * half / (d * d + half * half)
    }

    pub fn validate(&self, levels: &LevelStructure, tolerance_nm: f64) -> Result<()> {
        if transition_index(self.upper, self.lower).is_none() {
            return Err(Error::Domain(format!("{}->{} is not a radiative transition", self.upper, self.lower)));
        }
        if !(self.fwhm > 0.0 && self.fwhm.is_finite()) {
            return Err(Error::Domain(format!(
                "line {}->{}: FWHM must be positive, got {}",
                self.upper, self.lower, self.fwhm
            )));
        }
        if !(self.area >= 0.0 && self.area.is_finite()) {
            return Err(Error::Domain(format!(
                "line {}->{}: area must be non-negative, got {}",
                self.upper, self.lower, self.area
            )));
        }
        let nominal = levels.transition_wavelength(self.upper, self.lower);
        if (self.center - nominal).abs() > tolerance_nm {
            return Err(Error::Domain(format!(
                "line {}->{}: center {} nm is more than {tolerance_nm} nm from the level-energy value {nominal:.3} nm",
                self.upper, self.lower, self.center
            )));
        }
        Ok(())
    }
}

/// Pointwise sum of Lorentzian lines on `grid`.
pub fn synthesize_spectrum(temperature: f64, lines: &[TransitionLine], grid: &[f64]) -> Result<EmissionSpectrum> {
    let cross_sections = grid
        .iter()
        .map(|&w| lines.iter().map(|l| l.profile(w)).sum())
        .collect();
    EmissionSpectrum::new(temperature, grid.to_vec(), cross_sections)
}

/// Free-space radiative rates γ_{i→j} (s⁻¹) at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub temperature: f64,
    /// `rates[i - 5][j - 1]` is γ_{i→j}.
    pub rates: [[f64; 4]; 3],
}

impl RateTable {
    pub fn get(&self, upper: usize, lower: usize) -> Result<f64> {
        transition_index(upper, lower)
            .map(|k| self.rates[k / 4][k % 4])
            .ok_or(Error::MissingTransition { upper, lower })
    }

    pub fn set(&mut self, upper: usize, lower: usize, rate: f64) -> Result<()> {
        let k = transition_index(upper, lower).ok_or(Error::MissingTransition { upper, lower })?;
        self.rates[k / 4][k % 4] = rate;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        transitions().map(move |(i, j)| ((i, j), self.rates[i - 5][j - 1]))
    }

    /// Total radiative decay rate of excited level `upper`.
    pub fn total_from(&self, upper: usize) -> f64 {
        self.rates[upper - 5].iter().sum()
    }

    /// Σ_i p_i Σ_j γ_{i→j} with thermal excited-manifold weights p_i.
    pub fn thermal_total(&self, occupations: &[f64; 3]) -> f64 {
        EXCITED
            .into_iter()
            .zip(occupations)
            .map(|(i, p)| p * self.total_from(i))
            .sum()
    }
}

/// Converts emitted line areas into radiative rates.
///
/// Each area is divided by the thermal occupation of its emitting level, and
/// the set is scaled so that the thermally averaged total decay rate equals
/// 1/τ_rad.
pub fn extract_rates(
    lines: &[TransitionLine],
    temperature: f64,
    env: &EnvironmentConfig,
    levels: &LevelStructure,
    consts: &PhysicalConstants,
) -> Result<RateTable> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    let mut areas = [[None; 4]; 3];
    for line in lines {
        let k = transition_index(line.upper, line.lower).ok_or(Error::MissingTransition {
            upper: line.upper,
            lower: line.lower,
        })?;
        areas[k / 4][k % 4] = Some(line.area);
    }
    let occupations = levels.excited_occupations(temperature, consts);
    let total_area: f64 = lines.iter().map(|l| l.area).sum();
    if !(total_area > 0.0) {
        return Err(Error::ZeroArea);
    }
    let mut table = RateTable {
        temperature,
        rates: [[0.0; 4]; 3],
    };
    for (i, j) in transitions() {
        let area = areas[i - 5][j - 1].ok_or(Error::MissingTransition { upper: i, lower: j })?;
        table.rates[i - 5][j - 1] = area / (occupations[i - 5] * total_area * env.tau_rad);
    }
    Ok(table)
}

/// Line parameters at one tabulated temperature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineSet {
    pub temperature: f64,
    /// All twelve transitions in canonical order.
    pub lines: Vec<TransitionLine>,
}

impl LineSet {
    pub fn new(temperature: f64, lines: Vec<TransitionLine>) -> Result<Self> {
        let mut slots: [Option<TransitionLine>; NUM_TRANSITIONS] = [None; NUM_TRANSITIONS];
        for line in lines {
            let k = transition_index(line.upper, line.lower).ok_or(Error::MissingTransition {
                upper: line.upper,
                lower: line.lower,
            })?;
            if slots[k].is_some() {
                return Err(Error::Domain(format!(
                    "T = {temperature} K: duplicate line {}->{}",
                    line.upper, line.lower
                )));
            }
            slots[k] = Some(line);
        }
        let lines = slots
            .iter()
            .zip(transitions())
            .map(|(slot, (upper, lower))| slot.ok_or(Error::MissingTransition { upper, lower }))
            .collect::<Result<Vec<_>>>()?;
        Ok(LineSet { temperature, lines })
    }
}

/// Per-temperature line fits, ordered by temperature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineTable {
    sets: Vec<LineSet>,
}

pub const LINE_TABLE_HEADER: &str = "T,upper,lower,center_nm,fwhm_nm,area";

/// Stand-in line table for Yb:YLF between 78 K and 300 K.
pub const DEFAULT_LINE_TABLE: &str = include_str!("../../data/yb_ylf_lines.csv");

impl LineTable {
    pub fn new(mut sets: Vec<LineSet>) -> Result<Self> {
        sets.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
        if let Some(w) = sets.windows(2).find(|w| w[0].temperature == w[1].temperature) {
            return Err(Error::Domain(format!("temperature {} K tabulated twice", w[0].temperature)));
        }
        Ok(LineTable { sets })
    }

    pub fn builtin() -> Self {
        LineTable::parse(DEFAULT_LINE_TABLE, Path::new("<builtin>")).expect("builtin line table is valid")
    }

    pub fn sets(&self) -> &[LineSet] {
        &self.sets
    }

    pub fn temperature_range(&self) -> Option<(f64, f64)> {
        Some((self.sets.first()?.temperature, self.sets.last()?.temperature))
    }

    pub fn validate(&self, levels: &LevelStructure, tolerance_nm: f64) -> Result<()> {
        for set in &self.sets {
            for line in &set.lines {
                line.validate(levels, tolerance_nm)
                    .map_err(|e| Error::Config(format!("line table at T = {} K: {e}", set.temperature)))?;
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut rows: Vec<(f64, TransitionLine)> = Vec::new();
        let mut seen_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !seen_header {
                let header: Vec<&str> = line.split(',').map(str::trim).collect();
                if header.join(",") != LINE_TABLE_HEADER {
                    return Err(parse_err(line_no, format!("expected header `{LINE_TABLE_HEADER}`")));
                }
                seen_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 6 {
                return Err(parse_err(line_no, format!("expected 6 columns, found {}", f.len())));
            }
            let num = |k: usize| -> Result<f64> {
                f[k].parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("bad number `{}`", f[k])))
            };
            let level = |k: usize| -> Result<usize> {
                f[k].parse::<usize>()
                    .map_err(|_| parse_err(line_no, format!("bad level `{}`", f[k])))
            };
            let line = TransitionLine {
                upper: level(1)?,
                lower: level(2)?,
                center: num(3)?,
                fwhm: num(4)?,
                area: num(5)?,
            };
            if !(line.fwhm > 0.0) || !(line.area >= 0.0) {
                return Err(Error::Validation {
                    path: origin.to_path_buf(),
                    line: line_no,
                    msg: "FWHM must be positive and area non-negative".into(),
                });
            }
            rows.push((num(0)?, line));
        }
        if !seen_header {
            return Err(parse_err(1, "empty line table".into()));
        }
        let mut temps: Vec<f64> = rows.iter().map(|r| r.0).collect();
        temps.sort_by(f64::total_cmp);
        temps.dedup();
        let sets = temps
            .into_iter()
            .map(|t| {
                let lines = rows.iter().filter(|r| r.0 == t).map(|r| r.1).collect();
                LineSet::new(t, lines)
            })
            .collect::<Result<Vec<_>>>()?;
        LineTable::new(sets)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        LineTable::parse(&fs::read_to_string(path)?, path)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{LINE_TABLE_HEADER}\n");
        for set in &self.sets {
            for l in &set.lines {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    set.temperature, l.upper, l.lower, l.center, l.fwhm, l.area
                );
            }
        }
        out
    }
}

/// Piecewise-linear interpolation of line parameters in temperature.
#[derive(Debug, Clone)]
pub struct LineInterpolator {
    table: LineTable,
}

impl LineInterpolator {
    pub fn new(table: LineTable) -> Result<Self> {
        if table.sets.len() < 2 {
            return Err(Error::Domain(format!(
                "interpolation needs at least 2 temperatures, got {}",
                table.sets.len()
            )));
        }
        Ok(LineInterpolator { table })
    }

    pub fn table(&self) -> &LineTable {
        &self.table
    }

    pub fn range(&self) -> (f64, f64) {
        self.table.temperature_range().expect("non-empty table")
    }

    /// Line set at `temperature`; refuses to extrapolate.
    pub fn at(&self, temperature: f64) -> Result<Vec<TransitionLine>> {
        let (min, max) = self.range();
        if !(temperature >= min && temperature <= max) {
            return Err(Error::OutOfRange { temperature, min, max });
        }
        let sets = &self.table.sets;
        let upper = sets
            .iter()
            .position(|s| s.temperature >= temperature)
            .expect("temperature within range");
        if sets[upper].temperature == temperature {
            return Ok(sets[upper].lines.clone());
        }
        let (a, b) = (&sets[upper - 1], &sets[upper]);
        let t = (temperature - a.temperature) / (b.temperature - a.temperature);
        let mix = |x: f64, y: f64| (1.0 - t) * x + t * y;
        Ok(a.lines
            .iter()
            .zip(&b.lines)
            .map(|(x, y)| TransitionLine {
                upper: x.upper,
                lower: x.lower,
                center: mix(x.center, y.center),
                fwhm: mix(x.fwhm, y.fwhm),
                area: mix(x.area, y.area),
            })
            .collect())
    }
}

/// Where a line table comes from; kept for provenance headers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LineSource {
    Builtin,
    File(PathBuf),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CODATA;
    use std::io::Write;

    fn levels() -> LevelStructure {
        LevelStructure::default()
    }

    fn line(upper: usize, lower: usize, center: f64, fwhm: f64, area: f64) -> TransitionLine {
        TransitionLine { upper, lower, center, fwhm, area }
    }

    fn uniform_lines(levels: &LevelStructure, area: f64) -> Vec<TransitionLine> {
        transitions()
            .map(|(i, j)| line(i, j, levels.transition_wavelength(i, j), 2.0, area))
            .collect()
    }

    #[test]
    fn loads_small_file_in_order() {
        let text = "# source: test\n# temperature_K: 150\n950.0 1e-21\n951.5, 2e-21\n953 0\n";
        let s = parse_spectrum(text, Path::new("t.txt")).unwrap();
        assert_eq!(s.temperature(), 150.0);
        assert_eq!(s.wavelengths(), &[950.0, 951.5, 953.0]);
        assert_eq!(s.cross_sections(), &[1e-21, 2e-21, 0.0]);
    }

    #[test]
    fn negative_cross_section_names_row() {
        let text = "# temperature_K: 150\n950.0 1e-21\n951.0 -2e-21\n";
        match parse_spectrum(text, Path::new("t.txt")) {
            Err(Error::Validation { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_header_and_bad_rows() {
        assert!(matches!(
            parse_spectrum("950 1\n951 2\n", Path::new("t")),
            Err(Error::MissingHeader(_))
        ));
        assert!(matches!(
            parse_spectrum("# temperature_K: 100\n950 1 3\n", Path::new("t")),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_spectrum("# temperature_K: 100\n951 1\n950 1\n", Path::new("t")),
            Err(Error::Validation { line: 3, .. })
        ));
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let grid: Vec<f64> = (0..500).map(|k| 940.0 + 0.2437 * k as f64).collect();
        let lines = uniform_lines(&levels(), 1.234_567e-20);
        let s = synthesize_spectrum(123.4, &lines, &grid).unwrap();
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(s.to_text().as_bytes()).unwrap();
        let back = load_spectrum(file.path()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_text(), s.to_text());
    }

    #[test]
    fn lorentzian_peak_and_empty_synthesis() {
        let l = line(5, 1, 971.7, 0.8, 3.0e-20);
        let s = synthesize_spectrum(100.0, &[l], &[971.7]).unwrap();
        assert!((s.cross_sections()[0] - 2.0 * 3.0e-20 / (PI * 0.8)).abs() < 1e-35);
        let grid = wavelength_grid(940.0, 1060.0, 0.5).unwrap();
        let empty = synthesize_spectrum(100.0, &[], &grid).unwrap();
        assert!(empty.cross_sections().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn synthesized_area_matches_line_areas() {
        // Two well separated lines on a fine grid spanning ±~100 FWHM.
        let lines = [line(5, 1, 960.0, 0.5, 2.0e-20), line(5, 4, 1020.0, 0.8, 1.0e-20)];
        let grid = wavelength_grid(880.0, 1100.0, 0.01).unwrap();
        let s = synthesize_spectrum(100.0, &lines, &grid).unwrap();
        let rel = (s.integrated_area() - 3.0e-20).abs() / 3.0e-20;
        assert!(rel < 5e-3, "relative area error {rel}");
    }

    #[test]
    fn grid_includes_endpoint() {
        let g = wavelength_grid(940.0, 1060.0, 0.1).unwrap();
        assert_eq!(g.len(), 1201);
        assert!((g[1200] - 1060.0).abs() < 1e-9);
        assert!(wavelength_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn uniform_areas_with_degenerate_excited_levels() {
        let lv = LevelStructure::new([0.0, 216.0, 246.0, 479.0, 10291.0, 10291.0 + 1e-9, 10291.0 + 2e-9]).unwrap();
        let env = EnvironmentConfig::default();
        let table = extract_rates(&uniform_lines(&lv, 1e-20), 100.0, &env, &lv, &CODATA).unwrap();
        for (_, rate) in table.iter() {
            assert!((rate * env.tau_rad * 4.0 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_channel_normalization() {
        let lv = levels();
        let env = EnvironmentConfig::default();
        let mut lines = uniform_lines(&lv, 0.0);
        lines[0].area = 5e-20;
        let t = 150.0;
        let table = extract_rates(&lines, t, &env, &lv, &CODATA).unwrap();
        let p = lv.excited_occupations(t, &CODATA);
        assert!((table.get(5, 1).unwrap() * p[0] * env.tau_rad - 1.0).abs() < 1e-14);
        assert_eq!(table.iter().filter(|(_, r)| *r != 0.0).count(), 1);
        assert!((table.thermal_total(&p) * env.tau_rad - 1.0).abs() < 1e-14);
    }

    #[test]
    fn extraction_errors() {
        let lv = levels();
        let env = EnvironmentConfig::default();
        assert!(matches!(
            extract_rates(&uniform_lines(&lv, 0.0), 100.0, &env, &lv, &CODATA),
            Err(Error::ZeroArea)
        ));
        let mut lines = uniform_lines(&lv, 1.0);
        lines.pop();
        assert!(matches!(
            extract_rates(&lines, 100.0, &env, &lv, &CODATA),
            Err(Error::MissingTransition { upper: 7, lower: 4 })
        ));
    }

    fn two_point_table() -> LineTable {
        let lv = levels();
        let a = LineSet::new(78.0, uniform_lines(&lv, 1.0)).unwrap();
        let mut b_lines = uniform_lines(&lv, 3.0);
        for l in &mut b_lines {
            l.center += 0.5;
            l.fwhm = 4.0;
        }
        let b = LineSet::new(150.0, b_lines).unwrap();
        LineTable::new(vec![b, a]).unwrap()
    }

    #[test]
    fn interpolation_nodes_midpoint_and_range() {
        let interp = LineInterpolator::new(two_point_table()).unwrap();
        let node = interp.at(150.0).unwrap();
        assert_eq!(node, interp.table().sets()[1].lines);
        let mid = interp.at(114.0).unwrap();
        let (a, b) = (&interp.table().sets()[0].lines, &interp.table().sets()[1].lines);
        for ((m, x), y) in mid.iter().zip(a).zip(b) {
            assert_eq!(m.center, 0.5 * (x.center + y.center));
            assert_eq!(m.fwhm, 3.0);
            assert_eq!(m.area, 2.0);
        }
        assert!(matches!(interp.at(70.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(interp.at(150.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn interpolator_needs_two_temperatures() {
        let lv = levels();
        let single = LineTable::new(vec![LineSet::new(100.0, uniform_lines(&lv, 1.0)).unwrap()]).unwrap();
        assert!(LineInterpolator::new(single).is_err());
    }

    #[test]
    fn line_table_csv_round_trip() {
        let table = two_point_table();
        let back = LineTable::parse(&table.to_csv(), Path::new("t.csv")).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn builtin_table_is_consistent_with_default_levels() {
        let table = LineTable::builtin();
        table.validate(&levels(), 3.0).unwrap();
        assert_eq!(table.temperature_range(), Some((78.0, 300.0)));
    }

    #[test]
    fn incomplete_line_set_is_rejected() {
        let mut lines = uniform_lines(&levels(), 1.0);
        lines.remove(3);
        assert!(matches!(
            LineSet::new(100.0, lines),
            Err(Error::MissingTransition { upper: 5, lower: 4 })
        ));
    }
}
