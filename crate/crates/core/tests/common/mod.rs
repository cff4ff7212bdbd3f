#![allow(dead_code)]

use cavicool::dynamics::{Channel, Drive, Jump, LindbladGenerator};
use cavicool::thermo::Scenario;
use cavicool::CavityConfig;
use rand::Rng;

/// A physical operating point drawn from the ranges the line table supports.
pub fn random_scenario<R: Rng>(rng: &mut R) -> (Scenario, f64) {
    let t = rng.random_range(78.0..150.0);
    let intensity = 10f64.powf(rng.random_range(2.0..7.0));
    let mut s = Scenario::default()
        .with_pump_level(rng.random_range(1..=4))
        .with_fixed_intensity(intensity);
    if rng.random_bool(0.5) {
        let cavity = CavityConfig::default()
            .with_reflectivity(rng.random_range(0.0..0.995))
            .with_mismatch(rng.random_range(-30.0..30.0));
        s = s.with_cavity(Some(cavity));
    }
    s.environment.alpha_imp = rng.random_range(0.0..1e-3);
    (s, t)
}

/// Seven-level generator with the production jump topology, but energies
/// and rates of order one so explicit time stepping reaches the steady state.
pub fn rescaled_generator<R: Rng>(rng: &mut R) -> LindbladGenerator {
    let mut ground: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..3.0)).collect();
    let mut excited: Vec<f64> = (0..3).map(|_| rng.random_range(10.0..13.0)).collect();
    ground.sort_by(f64::total_cmp);
    excited.sort_by(f64::total_cmp);
    ground[0] = 0.0;
    let bare: Vec<f64> = ground.iter().chain(&excited).copied().collect();
    let lower = rng.random_range(0..4);
    let omega_l = bare[4] - bare[lower];
    let frame: Vec<f64> = bare
        .iter()
        .enumerate()
        .map(|(k, &w)| if k >= 4 { w - omega_l } else { w })
        .collect();

    let mut jumps = Vec::new();
    for k in [1, 2, 3, 5, 6] {
        let down = rng.random_range(0.5..2.0);
        jumps.push(Jump { to: k - 1, from: k, rate: down, channel: Channel::Phonon });
        jumps.push(Jump { to: k, from: k - 1, rate: down * rng.random_range(0.05..0.9), channel: Channel::Phonon });
    }
    jumps.push(Jump { to: 3, from: 4, rate: rng.random_range(0.0..0.2), channel: Channel::NonRadiative });
    for i in 4..7 {
        for j in 0..4 {
            jumps.push(Jump { to: j, from: i, rate: rng.random_range(0.05..0.5), channel: Channel::Spontaneous });
        }
    }
    let drive = Drive { lower, upper: 4, rabi: rng.random_range(0.1..2.0) };
    LindbladGenerator::new(frame, bare, Some(drive), jumps).unwrap()
}

pub fn two_level(rabi: f64, gamma: f64) -> LindbladGenerator {
    LindbladGenerator::new(
        vec![0.0, 0.0],
        vec![0.0, 1.0],
        Some(Drive { lower: 0, upper: 1, rabi }),
        vec![Jump { to: 0, from: 1, rate: gamma, channel: Channel::Spontaneous }],
    )
    .unwrap()
}
