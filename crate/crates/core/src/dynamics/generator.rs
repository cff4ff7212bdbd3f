use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::params::{rabi_frequency, thermal_occupancy, EnvironmentConfig, LevelStructure, PumpConfig, EXCITED, GROUND};
use crate::spectra::RateTable;

use super::DensityMatrix;

/// Physical origin of a jump, used to split the energy currents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Channel {
    Phonon,
    NonRadiative,
    Spontaneous,
}

/// Jump operator `|to⟩⟨from|` with rate `rate` (s⁻¹).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub to: usize,
    pub from: usize,
    pub rate: f64,
    pub channel: Channel,
}

/// Resonant coupling `rabi·(|upper⟩⟨lower| + h.c.)`, in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Drive {
    pub lower: usize,
    pub upper: usize,
    pub rabi: f64,
}

/// Time-independent Lindblad generator, all frequencies in rad/s (H/ħ).
///
/// `frame_energies` are the diagonal of the rotating-frame Hamiltonian;
/// `bare_energies` are the lab-frame level energies used for energy
/// bookkeeping.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    dim: usize,
    frame_energies: Vec<f64>,
    bare_energies: Vec<f64>,
    drive: Option<Drive>,
    jumps: Vec<Jump>,
    hamiltonian: DMatrix<Complex64>,
    superop: DMatrix<Complex64>,
}

impl LindbladGenerator {
    pub fn new(frame_energies: Vec<f64>, bare_energies: Vec<f64>, drive: Option<Drive>, jumps: Vec<Jump>) -> Result<Self> {
        let dim = frame_energies.len();
        if dim == 0 || bare_energies.len() != dim {
            return Err(Error::Domain(format!(
                "{} frame energies but {} bare energies",
                dim,
                bare_energies.len()
            )));
        }
        if frame_energies.iter().chain(&bare_energies).any(|e| !e.is_finite()) {
            return Err(Error::Domain("non-finite level energy".into()));
        }
        if let Some(d) = drive {
            if d.lower >= dim || d.upper >= dim || d.lower == d.upper || !(d.rabi >= 0.0 && d.rabi.is_finite()) {
                return Err(Error::Domain(format!("invalid drive {d:?}")));
            }
        }
        for j in &jumps {
            if j.to >= dim || j.from >= dim || j.to == j.from {
                return Err(Error::Domain(format!("invalid jump {} <- {}", j.to, j.from)));
            }
            if !(j.rate >= 0.0 && j.rate.is_finite()) {
                return Err(Error::Domain(format!("jump {} <- {} has rate {}", j.to, j.from, j.rate)));
            }
        }

        let mut hamiltonian = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            frame_energies.iter().map(|&e| Complex64::new(e, 0.0)),
        ));
        if let Some(d) = drive {
            hamiltonian[(d.upper, d.lower)] = Complex64::new(d.rabi, 0.0);
            hamiltonian[(d.lower, d.upper)] = Complex64::new(d.rabi, 0.0);
        }
        let superop = assemble(dim, &hamiltonian, &jumps);
        Ok(LindbladGenerator {
            dim,
            frame_energies,
            bare_energies,
            drive,
            jumps,
            hamiltonian,
            superop,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &DMatrix<Complex64> {
        &self.hamiltonian
    }

    pub fn frame_energies(&self) -> &[f64] {
        &self.frame_energies
    }

    pub fn bare_energies(&self) -> &[f64] {
        &self.bare_energies
    }

    pub fn drive(&self) -> Option<Drive> {
        self.drive
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// The n²×n² matrix acting on row-major vec(ρ).
    pub fn superoperator(&self) -> &DMatrix<Complex64> {
        &self.superop
    }

    /// Largest diagonal magnitude of the superoperator, a bound on the
    /// fastest decay or oscillation rate.
    pub fn max_rate(&self) -> f64 {
        self.superop.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.dim;
        let v = nalgebra::DVector::from_iterator(n * n, (0..n * n).map(|k| rho[(k / n, k % n)]));
        let out = &self.superop * v;
        DMatrix::from_fn(n, n, |a, b| out[a * n + b])
    }

    /// 𝓛ρ evaluated term by term in double-double arithmetic, row-major.
    pub(crate) fn apply_dd(&self, rho: &DensityMatrix) -> Vec<Dd> {
        let n = self.dim;
        let mut out = vec![Dd::ZERO; n * n];
        for a in 0..n {
            for b in 0..n {
                // −i[H, ρ]: diagonal part, then the drive.
                let mut commutator = rho.entry(a, b).scale(self.frame_energies[a]) - rho.entry(a, b).scale(self.frame_energies[b]);
                if let Some(d) = self.drive {
                    for (x, y) in [(d.upper, d.lower), (d.lower, d.upper)] {
                        if a == x {
                            commutator += rho.entry(y, b).scale(d.rabi);
                        }
                        if b == y {
                            commutator = commutator - rho.entry(a, x).scale(d.rabi);
                        }
                    }
                }
                out[a * n + b] = -commutator.times_i();
            }
        }
        for j in &self.jumps {
            let gain = rho.entry(j.from, j.from).scale(j.rate);
            out[j.to * n + j.to] += gain;
            for x in 0..n {
                let half = 0.5 * j.rate;
                out[j.from * n + x] = out[j.from * n + x] - rho.entry(j.from, x).scale(half);
                out[x * n + j.from] = out[x * n + j.from] - rho.entry(x, j.from).scale(half);
            }
        }
        out
    }
}

fn assemble(dim: usize, h: &DMatrix<Complex64>, jumps: &[Jump]) -> DMatrix<Complex64> {
    let n2 = dim * dim;
    let idx = |a: usize, b: usize| a * dim + b;
    let i = Complex64::new(0.0, 1.0);
    let mut s = DMatrix::zeros(n2, n2);
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                if h[(a, c)] != Complex64::new(0.0, 0.0) {
                    s[(idx(a, b), idx(c, b))] -= i * h[(a, c)];
                }
                if h[(c, b)] != Complex64::new(0.0, 0.0) {
                    s[(idx(a, b), idx(a, c))] += i * h[(c, b)];
                }
            }
        }
    }
    for j in jumps {
        s[(idx(j.to, j.to), idx(j.from, j.from))] += Complex64::new(j.rate, 0.0);
        for x in 0..dim {
            s[(idx(j.from, x), idx(j.from, x))] -= Complex64::new(0.5 * j.rate, 0.0);
            s[(idx(x, j.from), idx(x, j.from))] -= Complex64::new(0.5 * j.rate, 0.0);
        }
    }
    s
}

/// Generator of the pumped seven-level ion in the frame rotating at the
/// pump frequency ω_L = ω₅ − ω_i.
pub fn build_generator(
    levels: &LevelStructure,
    env: &EnvironmentConfig,
    pump: &PumpConfig,
    rates: &RateTable,
    temperature: f64,
    consts: &PhysicalConstants,
) -> Result<LindbladGenerator> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    pump.validate()?;
    let bare = levels.angular(consts).to_vec();
    let lower = pump.lower_level - 1;
    let upper = EXCITED[0] - 1;
    let omega_l = bare[upper] - bare[lower];
    let frame: Vec<f64> = bare
        .iter()
        .enumerate()
        .map(|(k, &w)| if k >= upper { w - omega_l } else { w })
        .collect();

    let mut jumps = Vec::new();
    for k in [1, 2, 3, 5, 6] {
        let omega = bare[k] - bare[k - 1];
        let n = thermal_occupancy(omega, temperature, consts)?;
        jumps.push(Jump { to: k - 1, from: k, rate: env.gamma_ph * (n + 1.0), channel: Channel::Phonon });
        jumps.push(Jump { to: k, from: k - 1, rate: env.gamma_ph * n, channel: Channel::Phonon });
    }
    jumps.push(Jump { to: 3, from: 4, rate: env.w_nr, channel: Channel::NonRadiative });
    for i in EXCITED {
        for j in GROUND {
            jumps.push(Jump { to: j - 1, from: i - 1, rate: rates.get(i, j)?, channel: Channel::Spontaneous });
        }
    }
    let drive = Drive {
        lower,
        upper,
        rabi: rabi_frequency(pump, consts),
    };
    LindbladGenerator::new(frame, bare, Some(drive), jumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CODATA;
    use proptest::prelude::*;

    fn uniform_rates(rate: f64) -> RateTable {
        RateTable { temperature: 100.0, rates: [[rate; 4]; 3] }
    }

    fn default_generator(t: f64) -> LindbladGenerator {
        build_generator(
            &LevelStructure::default(),
            &EnvironmentConfig::default(),
            &PumpConfig::default(),
            &uniform_rates(125.0),
            t,
            &CODATA,
        )
        .unwrap()
    }

    fn random_matrix(n: usize, seed: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |a, b| {
            let k = (a * n + b) % seed.len();
            Complex64::new(seed[k], seed[(k * 7 + 3) % seed.len()])
        })
    }

    #[test]
    fn jump_inventory() {
        let g = default_generator(100.0);
        let count = |c| g.jumps().iter().filter(|j| j.channel == c).count();
        assert_eq!(count(Channel::Phonon), 10);
        assert_eq!(count(Channel::NonRadiative), 1);
        assert_eq!(count(Channel::Spontaneous), 12);
        let d = g.drive().unwrap();
        assert_eq!((d.lower, d.upper), (1, 4));
        // Pumped pair is degenerate in the rotating frame.
        assert!((g.frame_energies()[1] - g.frame_energies()[4]).abs() < 1e-15 * g.frame_energies()[6].abs());
    }

    #[test]
    fn two_level_generator_matches_bloch_equations() {
        let (g, gamma) = (3.0, 2.0);
        let gen = LindbladGenerator::new(
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            Some(Drive { lower: 0, upper: 1, rabi: g }),
            vec![Jump { to: 0, from: 1, rate: gamma, channel: Channel::Spontaneous }],
        )
        .unwrap();
        let i = Complex64::new(0.0, 1.0);
        let z = Complex64::new(0.0, 0.0);
        let r = |x: f64| Complex64::new(x, 0.0);
        // Rows/cols: ρ_gg, ρ_ge, ρ_eg, ρ_ee.
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            z,      i * g,             -i * g,            r(gamma),
            i * g,  r(-gamma / 2.0),    z,                -i * g,
            -i * g, z,                  r(-gamma / 2.0),   i * g,
            z,      -i * g,             i * g,            r(-gamma),
        ]);
        assert_eq!(gen.superoperator(), &expected);
    }

    #[test]
    fn missing_rate_is_reported() {
        let err = build_generator(
            &LevelStructure::default(),
            &EnvironmentConfig::default(),
            &PumpConfig::default(),
            &uniform_rates(1.0),
            0.0,
            &CODATA,
        );
        assert!(err.is_err());
    }

    #[test]
    fn mixed_state_trace_vanishes() {
        let g = default_generator(150.0);
        let out = g.apply(DensityMatrix::maximally_mixed(7).matrix());
        let scale = g.superoperator().norm();
        assert!(out.trace().norm() < 1e-15 * scale);
    }

    #[test]
    fn dd_action_matches_superoperator() {
        let g = default_generator(120.0);
        let seed: Vec<f64> = (0..17).map(|k| ((k * 37 % 17) as f64 - 8.0) / 9.0).collect();
        let m = random_matrix(7, &seed);
        let fast = g.apply(&m);
        let slow = g.apply_dd(&DensityMatrix::from_matrix(m).unwrap());
        for a in 0..7 {
            for b in 0..7 {
                let d = (fast[(a, b)] - slow[a * 7 + b].to_c64()).norm();
                assert!(d < 1e-14 * g.max_rate(), "({a},{b}) differs by {d}");
            }
        }
    }

    proptest! {
        #[test]
        fn preserves_hermiticity_and_trace(seed in proptest::collection::vec(-1.0f64..1.0, 49..50), t in 80.0f64..300.0) {
            let g = default_generator(t);
            let m = random_matrix(7, &seed);
            let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
            let out = g.apply(&herm);
            let scale = g.max_rate();
            prop_assert!((&out - out.adjoint()).camax() < 1e-14 * scale);
            prop_assert!(g.apply(&m).trace().norm() < 1e-14 * scale);
        }
    }
}
