//! Lindblad generator of the driven ion and its steady state.
//!
//! Matrix indices are 0-based: Stark level `k` lives at index `k - 1`.
//! Density matrices are vectorized row-major, `vec(ρ)[a·n + b] = ρ_ab`.

mod evolve;
mod generator;
mod solve;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dd::Dd;
use crate::error::{Error, Result};

pub use evolve::time_evolve;
pub use generator::{build_generator, Channel, Drive, Jump, LindbladGenerator};
pub use solve::{kernel_dimension, steady_state, SolveMethod, SteadyState};

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const NEGATIVITY_TOL: f64 = 1e-10;

/// Density matrix stored as an unevaluated sum `hi + lo` of two complex
/// matrices, so steady states can carry more than f64 precision into the
/// power bookkeeping. `lo` is zero for matrices built from f64 data.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    hi: DMatrix<Complex64>,
    lo: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Domain(format!(
                "density matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let lo = DMatrix::zeros(matrix.nrows(), matrix.ncols());
        Ok(DensityMatrix { hi: matrix, lo })
    }

    pub(crate) fn from_dd(dim: usize, entries: &[Dd]) -> Self {
        DensityMatrix {
            hi: DMatrix::from_fn(dim, dim, |a, b| entries[a * dim + b].hi()),
            lo: DMatrix::from_fn(dim, dim, |a, b| entries[a * dim + b].lo()),
        }
    }

    /// `|k⟩⟨k|`.
    pub fn pure(dim: usize, k: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        DensityMatrix::from_matrix(m).expect("square")
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let m = DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0));
        DensityMatrix::from_matrix(m).expect("square")
    }

    /// Diagonal state with the given (unnormalized) populations.
    pub fn diagonal(populations: &[f64]) -> Self {
        let total: f64 = populations.iter().sum();
        let m = DMatrix::from_fn(populations.len(), populations.len(), |a, b| {
            if a == b {
                Complex64::new(populations[a] / total, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        DensityMatrix::from_matrix(m).expect("square")
    }

    pub fn dim(&self) -> usize {
        self.hi.nrows()
    }

    /// Leading (f64) part of ρ.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.hi
    }

    pub(crate) fn entry(&self, a: usize, b: usize) -> Dd {
        Dd::from_parts(self.hi[(a, b)], self.lo[(a, b)])
    }

    pub fn population(&self, index: usize) -> f64 {
        self.entry(index, index).to_c64().re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.population(k)).collect()
    }

    pub fn trace(&self) -> f64 {
        let mut sum = Dd::ZERO;
        for k in 0..self.dim() {
            sum += self.entry(k, k);
        }
        sum.to_c64().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..=a {
                worst = worst.max((self.hi[(a, b)] - self.hi[(b, a)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.hi + self.hi.adjoint()) * Complex64::new(0.5, 0.0);
        let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.hi - &other.hi;
        let h = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
        0.5 * h.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::Domain(format!("density matrix is not Hermitian (deviation {herm:.3e})")));
        }
        let trace = self.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::Domain(format!("density matrix trace is {trace}")));
        }
        let min = self.min_eigenvalue();
        if min < -NEGATIVITY_TOL {
            return Err(Error::Domain(format!("density matrix has eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub(crate) fn to_vec(&self) -> Vec<Complex64> {
        let n = self.dim();
        (0..n * n).map(|k| self.hi[(k / n, k % n)]).collect()
    }

    pub(crate) fn from_vec(dim: usize, v: &[Complex64]) -> Self {
        DensityMatrix::from_matrix(DMatrix::from_fn(dim, dim, |a, b| v[a * dim + b])).expect("square")
    }

    /// `row,col,re,im` lines in row-major order, 1-based level labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,re,im\n");
        let n = self.dim();
        for a in 0..n {
            for b in 0..n {
                let z = self.entry(a, b).to_c64();
                let _ = writeln!(out, "{},{},{:e},{:e}", a + 1, b + 1, z.re, z.im);
            }
        }
        out
    }
}
