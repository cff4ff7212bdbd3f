use nalgebra::DVector;
use num_complex::Complex64;

use super::{DensityMatrix, LindbladGenerator};
use crate::error::{Error, Result};

const MAX_STEP_RATE: f64 = 0.1;
const DRIFT_LIMIT: f64 = 1e-6;

/// Classical fourth-order Runge–Kutta propagation of `rho0` to `t_final`.
///
/// The step is shortened so that an integer number of steps lands exactly on
/// `t_final`.
pub fn time_evolve(gen: &LindbladGenerator, rho0: &DensityMatrix, t_final: f64, dt: f64) -> Result<DensityMatrix> {
    let n = gen.dim();
    if rho0.dim() != n {
        return Err(Error::Domain(format!("state is {}x{}, generator acts on {n} levels", rho0.dim(), rho0.dim())));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) || !(dt > 0.0) {
        return Err(Error::Domain(format!("bad time grid t_final = {t_final}, dt = {dt}")));
    }
    let max_rate = gen.max_rate();
    if dt * max_rate >= MAX_STEP_RATE {
        return Err(Error::Unstable(format!(
            "step {dt:e} s is too long for rate {max_rate:e} s^-1 (need dt * rate < {MAX_STEP_RATE})"
        )));
    }
    if t_final == 0.0 {
        return Ok(rho0.clone());
    }
    let steps = (t_final / dt).ceil() as u64;
    let h = t_final / steps as f64;
    let s = gen.superoperator();
    let mut v = DVector::from_vec(rho0.to_vec());
    let trace0 = rho0.trace();
    let diag: Vec<usize> = (0..n).map(|k| k * n + k).collect();

    for step in 0..steps {
        let k1 = s * &v;
        let k2 = s * (&v + &k1 * Complex64::new(0.5 * h, 0.0));
        let k3 = s * (&v + &k2 * Complex64::new(0.5 * h, 0.0));
        let k4 = s * (&v + &k3 * Complex64::new(h, 0.0));
        v += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);

        let trace: f64 = diag.iter().map(|&k| v[k].re).sum();
        let most_negative = diag.iter().map(|&k| v[k].re).fold(0.0, f64::min);
        if (trace - trace0).abs() > DRIFT_LIMIT || most_negative < -DRIFT_LIMIT || !trace.is_finite() {
            return Err(Error::Unstable(format!(
                "step {step}: trace {trace}, smallest population {most_negative:e}"
            )));
        }
    }
    Ok(DensityMatrix::from_vec(n, v.as_slice()))
}
