mod common;

use cavicool::dynamics::{build_generator, kernel_dimension, steady_state, time_evolve, DensityMatrix};
use cavicool::CODATA;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_physical_points_are_steady() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let (s, t) = common::random_scenario(&mut rng);
        let rates = s.rates(t).unwrap();
        let gen = build_generator(&s.levels, &s.environment, &s.pump, &rates, t, &CODATA).unwrap();
        let ss = steady_state(&gen).unwrap();
        assert!(ss.relative_residual < 1e-10, "{t} K: {:e}", ss.relative_residual);
        ss.rho.validate().unwrap();
    }
}

#[test]
fn time_evolution_relaxes_to_the_steady_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..3 {
        let gen = common::rescaled_generator(&mut rng);
        assert_eq!(kernel_dimension(&gen), 1);
        let ss = steady_state(&gen).unwrap().rho;
        let dt = 0.05 / gen.max_rate();
        let rho = time_evolve(&gen, &DensityMatrix::pure(7, 0), 400.0, dt).unwrap();
        assert!(rho.trace_distance(&ss) < 1e-6, "{:e}", rho.trace_distance(&ss));
    }
}

#[test]
fn two_level_excited_population() {
    for g in [0.1, 1.0, 10.0] {
        for gamma in [0.5, 2.0] {
            let rho = steady_state(&common::two_level(g, gamma)).unwrap().rho;
            let exact = g * g / (2.0 * g * g + gamma * gamma / 4.0);
            assert!((rho.population(1) - exact).abs() < 1e-10);
        }
    }
}
