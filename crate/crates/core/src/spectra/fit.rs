//! Twelve-Lorentzian least-squares fit (Levenberg–Marquardt).
//!
//! Parameters per line are center, ln(half width) and area. The data are
//! normalized to unit peak before fitting so all parameters are O(1) apart
//! from the centers, and the damping uses Marquardt's diagonal scaling.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{transitions, EmissionSpectrum, TransitionLine, NUM_TRANSITIONS};
use crate::error::{Error, Result};
use crate::params::LevelStructure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions {
    /// Starting FWHM of every line (nm).
    pub initial_fwhm: f64,
    pub max_iterations: usize,
    /// Allowed distance of a fitted center from its level-energy value (nm).
    pub center_tolerance: f64,
    /// Fitted centers closer than this (nm) make the fit degenerate.
    pub min_separation: f64,
    /// Fit a constant offset alongside the lines. Noisy data clipped at zero
    /// carry a positive background that a free line would otherwise absorb.
    pub baseline: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            initial_fwhm: 2.0,
            max_iterations: 500,
            center_tolerance: 3.0,
            min_separation: 0.1,
            baseline: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineFit {
    pub temperature: f64,
    /// Canonical transition order.
    pub lines: Vec<TransitionLine>,
    /// ‖model − data‖₂ in cm².
    pub residual_norm: f64,
    /// Fitted constant offset (cm²); zero when the baseline is off.
    pub baseline: f64,
    pub iterations: usize,
}

/// Three parameters per line, then the baseline.
const P: usize = 3 * NUM_TRANSITIONS + 1;
const BASELINE: usize = P - 1;
const MIN_HALF_WIDTH: f64 = 1e-3;
const MAX_HALF_WIDTH: f64 = 50.0;

struct Problem<'a> {
    x: &'a [f64],
    y: Vec<f64>,
}

impl Problem<'_> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(&self.y).map(|(&w, &y)| model(p, w) - y),
        )
    }

    /// Least-squares areas (and baseline, if `baseline`) at fixed centers and widths.
    fn linear_amplitudes(&self, p: &[f64], baseline: bool) -> DVector<f64> {
        let cols = NUM_TRANSITIONS + usize::from(baseline);
        let basis = DMatrix::from_fn(self.x.len(), cols, |row, k| {
            if k == NUM_TRANSITIONS {
                return 1.0;
            }
            let (c, h) = (p[3 * k], p[3 * k + 1].exp());
            let d = self.x[row] - c;
            h / (PI * (d * d + h * h))
        });
        let y = DVector::from_column_slice(&self.y);
        basis.svd(true, true).solve(&y, 1e-12).unwrap_or_else(|_| DVector::zeros(cols))
    }

    fn cost(&self, p: &[f64]) -> f64 {
        0.5 * self.residuals(p).norm_squared()
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.x.len(), P);
        for (row, &w) in self.x.iter().enumerate() {
            for k in 0..NUM_TRANSITIONS {
                let (c, h, a) = (p[3 * k], p[3 * k + 1].exp(), p[3 * k + 2]);
                let d = w - c;
                let den = d * d + h * h;
                jac[(row, 3 * k)] = a * h / PI * 2.0 * d / (den * den);
                jac[(row, 3 * k + 1)] = h * a / PI * (d * d - h * h) / (den * den);
                jac[(row, 3 * k + 2)] = h / (PI * den);
            }
            jac[(row, BASELINE)] = 1.0;
        }
        jac
    }
}

fn model(p: &[f64], w: f64) -> f64 {
    p[BASELINE]
        + p[..BASELINE]
            .chunks_exact(3)
            .map(|q| {
                let h = q[1].exp();
                let d = w - q[0];
                q[2] * h / (PI * (d * d + h * h))
            })
            .sum::<f64>()
}

/// Fits the twelve radiative lines of `levels` to `spectrum`.
pub fn fit_lines(spectrum: &EmissionSpectrum, levels: &LevelStructure, options: &FitOptions) -> Result<LineFit> {
    if spectrum.len() < 100 {
        return Err(Error::Domain(format!(
            "line fit needs at least 100 samples, got {}",
            spectrum.len()
        )));
    }
    let nominal: Vec<(usize, usize, f64)> = transitions()
        .map(|(i, j)| (i, j, levels.transition_wavelength(i, j)))
        .collect();
    if let Some(&(_, _, w)) = nominal.iter().find(|(_, _, w)| !spectrum.covers(*w)) {
        return Err(Error::Coverage(w));
    }
    check_separation(nominal.iter().map(|n| (n.0, n.1, n.2)), options.min_separation)?;

    let peak = spectrum.cross_sections().iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::ZeroArea);
    }
    let problem = Problem {
        x: spectrum.wavelengths(),
        y: spectrum.cross_sections().iter().map(|s| s / peak).collect(),
    };

    let h0 = 0.5 * options.initial_fwhm;
    let mut p: Vec<f64> = Vec::with_capacity(P);
    for &(_, _, c) in &nominal {
        p.extend([c, h0.ln(), 0.0]);
    }
    p.push(0.0);
    // Areas enter linearly: start from their least-squares values.
    let amplitudes = problem.linear_amplitudes(&p, options.baseline);
    for k in 0..NUM_TRANSITIONS {
        p[3 * k + 2] = amplitudes[k].max(0.0);
    }
    if options.baseline {
        p[BASELINE] = amplitudes[NUM_TRANSITIONS];
    }

    let bounds: Vec<(f64, f64)> = nominal
        .iter()
        .flat_map(|&(_, _, c)| {
            let reach = 2.0 * options.center_tolerance;
            [(c - reach, c + reach), (MIN_HALF_WIDTH.ln(), MAX_HALF_WIDTH.ln()), (f64::NEG_INFINITY, f64::INFINITY)]
        })
        .chain([(f64::NEG_INFINITY, f64::INFINITY)])
        .collect();
    let free: Vec<bool> = (0..P).map(|k| k != BASELINE || options.baseline).collect();
    let (p, iterations) = levenberg_marquardt(&problem, p, &bounds, &free, options.max_iterations)?;
    let residual_norm = problem.residuals(&p).norm() * peak;

    let lines: Vec<TransitionLine> = nominal
        .iter()
        .zip(p[..BASELINE].chunks_exact(3))
        .map(|(&(upper, lower, _), q)| TransitionLine {
            upper,
            lower,
            center: q[0],
            fwhm: 2.0 * q[1].exp(),
            // Noise can push a vanishing line slightly negative.
            area: (q[2] * peak).max(0.0),
        })
        .collect();

    for (line, &(_, _, c0)) in lines.iter().zip(&nominal) {
        if !(line.center.is_finite() && line.fwhm.is_finite() && line.fwhm > 0.0) {
            return Err(Error::DegenerateFit(format!("line {}->{} diverged", line.upper, line.lower)));
        }
        if (line.center - c0).abs() > options.center_tolerance {
            return Err(Error::DegenerateFit(format!(
                "line {}->{} moved to {:.3} nm, {:.3} nm from its level-energy position",
                line.upper,
                line.lower,
                line.center,
                (line.center - c0).abs()
            )));
        }
    }
    check_separation(lines.iter().map(|l| (l.upper, l.lower, l.center)), options.min_separation)?;
    if lines.iter().all(|l| l.area == 0.0) {
        return Err(Error::ZeroArea);
    }

    Ok(LineFit {
        temperature: spectrum.temperature(),
        lines,
        residual_norm,
        baseline: p[BASELINE] * peak,
        iterations,
    })
}

fn check_separation(centers: impl Iterator<Item = (usize, usize, f64)>, min_separation: f64) -> Result<()> {
    let mut sorted: Vec<_> = centers.collect();
    sorted.sort_by(|a, b| a.2.total_cmp(&b.2));
    for pair in sorted.windows(2) {
        if pair[1].2 - pair[0].2 < min_separation {
            return Err(Error::DegenerateFit(format!(
                "lines {}->{} and {}->{} both sit at {:.3} nm",
                pair[0].0, pair[0].1, pair[1].0, pair[1].1, pair[0].2
            )));
        }
    }
    Ok(())
}

/// Damped Gauss–Newton with each trial point clipped to `bounds`.
fn levenberg_marquardt(
    problem: &Problem,
    mut p: Vec<f64>,
    bounds: &[(f64, f64)],
    free: &[bool],
    max_iterations: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut cost = problem.cost(&p);
    let mut lambda = 1.0;
    let scale = problem.y.iter().map(|y| y * y).sum::<f64>();
    for iteration in 1..=max_iterations {
        let jac = problem.jacobian(&p);
        let r = problem.residuals(&p);
        let mut jtj = jac.transpose() * &jac;
        let mut grad = jac.transpose() * r;
        for k in (0..P).filter(|&k| !free[k]) {
            jtj.row_mut(k).fill(0.0);
            jtj.column_mut(k).fill(0.0);
            jtj[(k, k)] = 1.0;
            grad[k] = 0.0;
        }
        if grad.amax() < 1e-15 * scale.max(1e-300) {
            return Ok((p, iteration));
        }
        let diag: Vec<f64> = (0..P).map(|k| jtj[(k, k)].max(1e-12 * jtj.diagonal().amax())).collect();

        loop {
            let mut a = jtj.clone();
            for k in 0..P {
                a[(k, k)] += lambda * diag[k];
            }
            let step = a.cholesky().map(|ch| ch.solve(&(-&grad)));
            let Some(step) = step else {
                lambda *= 10.0;
                if lambda > 1e16 {
                    return Err(Error::NonConvergence(iteration));
                }
                continue;
            };
            let trial: Vec<f64> = p
                .iter()
                .zip(step.iter())
                .zip(bounds)
                .map(|((a, b), &(lo, hi))| (a + b).clamp(lo, hi))
                .collect();
            let trial_cost = problem.cost(&trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let small_step = step
                    .iter()
                    .zip(&p)
                    .all(|(s, x)| s.abs() <= 1e-10 * (x.abs() + 1e-10));
                let small_gain = cost - trial_cost <= 1e-8 * cost + 1e-32 * scale;
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                if small_step || small_gain {
                    return Ok((p, iteration));
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                // No descent direction left: the fit has stalled at a minimum.
                return Ok((p, iteration));
            }
        }
    }
    Err(Error::NonConvergence(max_iterations))
}
