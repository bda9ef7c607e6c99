use ma_array::channel::{min_powers, simulate_uplink_sinr};
use ma_array::scenario::{InitStrategy, ScenarioConfig};

#[test]
fn million_symbols_within_two_percent_for_two_seeds() {
    let s = ScenarioConfig::reference().validate().unwrap();
    let x = s.initial_positions(InitStrategy::EndpointsUniform);
    let p = min_powers(&x, &s).unwrap();
    let a = simulate_uplink_sinr(&x, &s, &p, 1_000_000, 5).unwrap();
    let b = simulate_uplink_sinr(&x, &s, &p, 1_000_000, 6).unwrap();
    assert_ne!(a.empirical_sinr, b.empirical_sinr);
    for sim in [&a, &b] {
        for (g, eps) in sim.empirical_sinr.iter().zip(s.epsilons()) {
            assert!((g - eps).abs() / eps < 0.02, "{g} vs {eps}");
        }
        for i in 0..3 {
            assert!(sim.interference_power[i] < 1e-20 * sim.signal_power[i].max(1.0));
        }
    }
}

#[test]
fn error_shrinks_with_symbol_count() {
    let s = ScenarioConfig::reference().validate().unwrap();
    let x = s.initial_positions(InitStrategy::EndpointsUniform);
    let p = min_powers(&x, &s).unwrap();
    let mean_error = |n: usize| {
        let seeds = 0..6u64;
        let total: f64 = seeds
            .clone()
            .map(|seed| {
                let sim = simulate_uplink_sinr(&x, &s, &p, n, 100 + seed).unwrap();
                sim.empirical_sinr.iter().map(|g| (g - 1.0).abs()).sum::<f64>() / 3.0
            })
            .sum();
        total / seeds.count() as f64
    };
    let errors: Vec<f64> = [1_000, 100_000, 1_000_000].into_iter().map(mean_error).collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn scaling_powers_scales_sinr() {
    let s = ScenarioConfig::reference().validate().unwrap();
    let x = s.initial_positions(InitStrategy::Midpoint);
    let p = min_powers(&x, &s).unwrap();
    let base = simulate_uplink_sinr(&x, &s, &p, 200_000, 9).unwrap();
    let doubled = simulate_uplink_sinr(&x, &s, &p.scaled(2.0), 200_000, 9).unwrap();
    for (a, b) in base.empirical_sinr.iter().zip(&doubled.empirical_sinr) {
        assert!((b / a - 2.0).abs() < 1e-9);
    }
}
