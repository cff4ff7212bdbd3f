//! Efficiency trends on the built-in line table.

use cavicool::thermo::{efficiency_vs_temperature, inhibition_comparison, Scenario};
use cavicool::CavityConfig;

fn cavity(r: f64) -> Option<CavityConfig> {
    Some(CavityConfig::default().with_reflectivity(r))
}

fn half_max_width(xs: &[f64], ys: &[f64]) -> f64 {
    let k = ys.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    let half = 0.5 * ys[k];
    let cross = |range: Vec<usize>| {
        for w in range.windows(2) {
            let (a, b) = (w[0], w[1]);
            if ys[b] < half {
                return xs[a] + (half - ys[a]) * (xs[b] - xs[a]) / (ys[b] - ys[a]);
            }
        }
        panic!("curve never drops to half maximum");
    };
    cross((k..xs.len()).collect()) - cross((0..=k).rev().collect())
}

#[test]
fn free_space_four_five_crosses_zero_between_90_and_110_k() {
    let s = Scenario::default().with_pump_level(4);
    let eta: Vec<f64> = efficiency_vs_temperature(&[90.0, 110.0, 150.0], &s)
        .unwrap()
        .iter()
        .map(|b| b.eta)
        .collect();
    assert!(eta[0] < 0.0 && eta[1] > 0.0 && eta[2] > 0.0, "{eta:?}");
}

#[test]
fn best_free_space_pump_at_150_k_is_four_five() {
    let four = Scenario::default().with_pump_level(4).evaluate(150.0).unwrap();
    let two = Scenario::default().with_pump_level(2).evaluate(150.0).unwrap();
    assert!(four.eta > two.eta);
}

#[test]
fn cavity_two_five_cools_at_78_k() {
    for r in [0.95, 0.99] {
        let b = Scenario::default().with_pump_level(2).with_cavity(cavity(r)).evaluate(78.0).unwrap();
        assert!(b.eta > 0.0, "R = {r}: {}", b.eta);
    }
}

#[test]
fn efficiency_increases_with_reflectivity() {
    let eta: Vec<f64> = [0.95, 0.96, 0.98, 0.99]
        .iter()
        .map(|&r| Scenario::default().with_pump_level(2).with_cavity(cavity(r)).evaluate(85.0).unwrap().eta)
        .collect();
    assert!(eta.windows(2).all(|w| w[1] > w[0]), "{eta:?}");
}

#[test]
fn cavity_beats_free_space_below_100_k() {
    let temps = [78.0, 84.0, 90.0, 96.0];
    let cav = efficiency_vs_temperature(&temps, &Scenario::default().with_pump_level(2).with_cavity(cavity(0.99))).unwrap();
    for lower in [2, 4] {
        let free = efficiency_vs_temperature(&temps, &Scenario::default().with_pump_level(lower)).unwrap();
        for (c, f) in cav.iter().zip(&free) {
            assert!(c.eta > f.eta, "{} K, free pump {lower}: {} vs {}", c.temperature, c.eta, f.eta);
        }
    }
}

#[test]
fn mismatch_sweep_peaks_at_zero_and_narrows_with_reflectivity() {
    let offsets: Vec<f64> = (-20..=20).map(|k| k as f64).collect();
    let mut widths = Vec::new();
    for r in [0.96, 0.99] {
        let eta: Vec<f64> = offsets
            .iter()
            .map(|&dl| {
                let c = CavityConfig::default().with_reflectivity(r).with_mismatch(dl);
                Scenario::default().with_pump_level(2).with_cavity(Some(c)).evaluate(85.0).unwrap().eta
            })
            .collect();
        let k = eta.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(offsets[k], 0.0);
        widths.push(half_max_width(&offsets, &eta));
    }
    assert!(widths[1] < widths[0], "{widths:?}");
}

#[test]
fn sharper_cavity_loses_more_at_small_mismatch() {
    let relative_drop = |r: f64| {
        let eta = |dl: f64| {
            let c = CavityConfig::default().with_reflectivity(r).with_mismatch(dl);
            Scenario::default().with_pump_level(2).with_cavity(Some(c)).evaluate(100.0).unwrap().eta
        };
        let peak = eta(0.0);
        [-3.0, 3.0].map(|dl| (peak - eta(dl)) / peak.abs())
    };
    let (soft, sharp) = (relative_drop(0.96), relative_drop(0.99));
    for k in 0..2 {
        assert!(sharp[k] > soft[k] && soft[k] > 0.0, "{soft:?} vs {sharp:?}");
    }
}

#[test]
fn inhibition_improves_efficiency() {
    let temps = [78.0, 100.0, 125.0, 150.0];
    let cmp = inhibition_comparison(&temps, &Scenario::default().with_pump_level(2).with_cavity(cavity(0.98))).unwrap();
    for (k, gain) in cmp.improvement().iter().enumerate() {
        assert!((0.15..=0.80).contains(gain), "{} K: {gain}", temps[k]);
    }
}

#[test]
fn efficiency_respects_photon_energy_bound() {
    let mut s = Scenario::default().with_fixed_intensity(1e4);
    s.environment.alpha_imp = 0.0;
    let e = s.levels.energies();
    for lower in 1..=4 {
        let s = s.clone().with_pump_level(lower);
        let pump = e[4] - e[lower - 1];
        let bound = (e[6] - e[0] - pump) / pump;
        for t in [78.0, 120.0, 150.0] {
            assert!(s.evaluate(t).unwrap().eta <= bound);
        }
    }
}
