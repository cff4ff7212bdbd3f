//! Steady state by a direct solve of 𝓛ρ = 0 with one row replaced by the
//! trace constraint.
//!
//! The rates span up to twelve orders of magnitude, and the energy currents
//! computed from ρ cancel to a similar degree, so the LU solution is refined
//! against a residual evaluated in double-double arithmetic from the
//! individual rates rather than from the assembled f64 superoperator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{DensityMatrix, LindbladGenerator};
use crate::dd::Dd;
use crate::error::{Error, Result};

const KERNEL_THRESHOLD: f64 = 1e-10;
const MAX_CONDITION: f64 = 1e14;
const RESIDUAL_TOL: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveMethod {
    /// LU with iterative refinement.
    Direct,
    /// Smallest right singular vector of the generator.
    SingularVector,
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub method: SolveMethod,
    /// ‖𝓛ρ‖_F / (‖𝓛‖_F ‖ρ‖_F).
    pub relative_residual: f64,
    /// Ratio of extreme LU pivots of the row-equilibrated system.
    pub condition_estimate: f64,
}

/// Rescales every row by a power of two so its largest entry lies in [1, 2).
fn row_scales(m: &DMatrix<Complex64>) -> Vec<f64> {
    (0..m.nrows())
        .map(|r| {
            let max = m.row(r).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if max > 0.0 {
                2f64.powi(-max.log2().floor() as i32)
            } else {
                1.0
            }
        })
        .collect()
}

fn scale_rows(m: &mut DMatrix<Complex64>, scales: &[f64]) {
    for (r, &s) in scales.iter().enumerate() {
        m.row_mut(r).scale_mut(s);
    }
}

/// Number of singular values of the row-equilibrated generator below
/// `KERNEL_THRESHOLD·σ_max`.
pub fn kernel_dimension(gen: &LindbladGenerator) -> usize {
    kernel(gen).0
}

/// Kernel dimension together with the right singular vector of the smallest
/// singular value.
fn kernel(gen: &LindbladGenerator) -> (usize, DVector<Complex64>) {
    let mut m = gen.superoperator().clone();
    let scales = row_scales(&m);
    scale_rows(&mut m, &scales);
    let svd = m.svd(false, true);
    let sigma = &svd.singular_values;
    let max = sigma.max();
    let dim = sigma.iter().filter(|&&s| s <= KERNEL_THRESHOLD * max).count();
    let k = sigma.imin();
    let v_t = svd.v_t.expect("requested V^H");
    let v = v_t.row(k).adjoint();
    (dim, v)
}

pub fn steady_state(gen: &LindbladGenerator) -> Result<SteadyState> {
    let n = gen.dim();
    let n2 = n * n;

    let mut a = gen.superoperator().clone();
    for c in 0..n2 {
        a[(0, c)] = Complex64::new(0.0, 0.0);
    }
    for k in 0..n {
        a[(0, k * n + k)] = Complex64::new(1.0, 0.0);
    }
    let scales = row_scales(&a);
    scale_rows(&mut a, &scales);

    let lu = a.lu();
    let pivots: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let min_pivot = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    let max_pivot = pivots.iter().copied().fold(0.0, f64::max);
    let condition_estimate = if min_pivot > 0.0 { max_pivot / min_pivot } else { f64::INFINITY };

    let (rho, method) = if condition_estimate <= MAX_CONDITION {
        let mut rhs = DVector::zeros(n2);
        rhs[0] = Complex64::new(scales[0], 0.0);
        let x0 = lu.solve(&rhs).ok_or_else(|| Error::Solve("singular trace-constrained system".into()))?;
        let mut x: Vec<Dd> = x0.iter().map(|&z| Dd::from(z)).collect();
        for _ in 0..REFINEMENT_STEPS {
            let residual = constrained_residual(gen, &x);
            let rhs = DVector::from_iterator(n2, residual.iter().zip(&scales).map(|(r, s)| r.to_c64() * *s));
            let delta = lu.solve(&rhs).ok_or_else(|| Error::Solve("singular refinement step".into()))?;
            let x_max = x.iter().map(|z| z.to_c64().norm()).fold(0.0, f64::max);
            let d_max = delta.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (xi, di) in x.iter_mut().zip(delta.iter()) {
                *xi += Dd::from(*di);
            }
            if d_max <= 1e-30 * x_max {
                break;
            }
        }
        (DensityMatrix::from_dd(n, &hermitize(n, &x)), SolveMethod::Direct)
    } else {
        // A well-conditioned constrained system already rules out a second
        // null vector, so the SVD is only needed here.
        let (kernel_dim, singular_vector) = kernel(gen);
        if kernel_dim > 1 {
            return Err(Error::DegenerateKernel(kernel_dim));
        }
        let trace: Complex64 = (0..n).map(|k| singular_vector[k * n + k]).sum();
        if trace.norm() == 0.0 {
            return Err(Error::Solve("null vector has zero trace".into()));
        }
        let v: Vec<Dd> = singular_vector.iter().map(|z| Dd::from(z / trace)).collect();
        (DensityMatrix::from_dd(n, &hermitize(n, &v)), SolveMethod::SingularVector)
    };

    let residual = gen.apply(rho.matrix()).norm();
    let relative_residual = residual / (gen.superoperator().norm() * rho.matrix().norm());
    if !(relative_residual < RESIDUAL_TOL) {
        return Err(Error::NotSteady(relative_residual));
    }
    Ok(SteadyState {
        rho,
        method,
        relative_residual,
        condition_estimate,
    })
}

/// `b − A x` for the trace-constrained system: row 0 holds `1 − tr ρ`, the
/// other rows `−(𝓛ρ)`.
fn constrained_residual(gen: &LindbladGenerator, x: &[Dd]) -> Vec<Dd> {
    let n = gen.dim();
    let rho = DensityMatrix::from_dd(n, x);
    let mut r: Vec<Dd> = gen.apply_dd(&rho).into_iter().map(|z| -z).collect();
    let mut trace = Dd::ZERO;
    for k in 0..n {
        trace += x[k * n + k];
    }
    r[0] = Dd::from(Complex64::new(1.0, 0.0)) - trace;
    r
}

fn hermitize(n: usize, x: &[Dd]) -> Vec<Dd> {
    let mut out = x.to_vec();
    for a in 0..n {
        for b in 0..n {
            out[a * n + b] = (x[a * n + b] + x[b * n + a].conj()).scale(0.5);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CODATA;
    use crate::dynamics::{build_generator, Channel, Drive, Jump};
    use crate::params::{EnvironmentConfig, LevelStructure, PumpConfig};
    use crate::spectra::RateTable;

    fn two_level(g: f64, gamma: f64) -> LindbladGenerator {
        LindbladGenerator::new(
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            Some(Drive { lower: 0, upper: 1, rabi: g }),
            vec![Jump { to: 0, from: 1, rate: gamma, channel: Channel::Spontaneous }],
        )
        .unwrap()
    }

    #[test]
    fn two_level_population() {
        for g in [0.01, 0.3, 1.0, 7.0, 1e3] {
            for gamma in [0.05, 1.0, 20.0] {
                let ss = steady_state(&two_level(g, gamma)).unwrap();
                let exact = g * g / (2.0 * g * g + gamma * gamma / 4.0);
                assert!((ss.rho.population(1) - exact).abs() < 1e-12, "g={g} Γ={gamma}");
                ss.rho.validate().unwrap();
            }
        }
    }

    fn rates(v: f64) -> RateTable {
        RateTable { temperature: 100.0, rates: [[v; 4]; 3] }
    }

    #[test]
    fn default_config_has_unique_steady_state() {
        let gen = build_generator(
            &LevelStructure::default(),
            &EnvironmentConfig::default(),
            &PumpConfig::default(),
            &rates(125.0),
            150.0,
            &CODATA,
        )
        .unwrap();
        let ss = steady_state(&gen).unwrap();
        assert_eq!(ss.method, SolveMethod::Direct);
        assert!(ss.relative_residual < 1e-14);
        ss.rho.validate().unwrap();
    }

    #[test]
    fn undriven_state_is_thermal_ground_manifold() {
        let levels = LevelStructure::default();
        for t in [80.0, 100.0, 150.0] {
            let pump = PumpConfig::default().with_intensity(0.0);
            let gen = build_generator(&levels, &EnvironmentConfig::default(), &pump, &rates(125.0), t, &CODATA).unwrap();
            let rho = steady_state(&gen).unwrap().rho;
            let boltzmann = levels.ground_occupations(t, &CODATA);
            for (k, p) in boltzmann.iter().enumerate() {
                assert!((rho.population(k) - p).abs() <= 1e-9 * p);
            }
            for k in 4..7 {
                assert!(rho.population(k).abs() < 1e-12);
            }
            let off = rho.matrix().iter().enumerate().filter(|(k, _)| k % 8 != 0).map(|(_, z)| z.norm()).fold(0.0, f64::max);
            assert!(off < 1e-15);
        }
    }

    #[test]
    fn decoupled_manifolds_are_degenerate() {
        let env = EnvironmentConfig { w_nr: 0.0, ..Default::default() };
        let pump = PumpConfig::default().with_intensity(0.0);
        let gen = build_generator(&LevelStructure::default(), &env, &pump, &rates(0.0), 1.0, &CODATA).unwrap();
        assert!(matches!(steady_state(&gen), Err(Error::DegenerateKernel(2))));
    }

    #[test]
    fn non_radiative_decay_alone_empties_excited_manifold() {
        let pump = PumpConfig::default().with_intensity(0.0);
        let gen = build_generator(&LevelStructure::default(), &EnvironmentConfig::default(), &pump, &rates(0.0), 1.0, &CODATA).unwrap();
        let rho = steady_state(&gen).unwrap().rho;
        assert!((rho.population(0) - 1.0).abs() < 1e-12);
    }
}
