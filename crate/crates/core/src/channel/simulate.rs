use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{channel_matrix, zf_combiner, PowerAllocation};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Per-user sample averages from a symbol-level run of `y = WᴴH P^{1/2} s + Wᴴn`.
#[derive(Debug, Clone, PartialEq)]
pub struct UplinkSimulation {
    /// Desired-signal power over residual (interference + noise) power.
    pub empirical_sinr: Vec<f64>,
    pub signal_power: Vec<f64>,
    pub interference_power: Vec<f64>,
    pub noise_power: Vec<f64>,
    pub num_symbols: usize,
}

/// Monte-Carlo SINR at the zero-forcing combiner output.
///
/// Symbols are unit-modulus with uniform random phase; antenna noise is
/// circularly-symmetric Gaussian with variance σ². Deterministic in `seed`.
pub fn simulate_uplink_sinr(
    x: &[f64],
    scenario: &Scenario,
    p: &PowerAllocation,
    num_symbols: usize,
    seed: u64,
) -> Result<UplinkSimulation> {
    if num_symbols == 0 {
        return Err(Error::Dimension("num_symbols must be at least 1".into()));
    }
    let h = channel_matrix(x, scenario);
    let w = zf_combiner(&h)?;
    let m = h.num_users();
    let n = h.num_antennas();
    if p.as_slice().len() != m {
        return Err(Error::Dimension(format!("{} powers for {m} users", p.as_slice().len())));
    }
    let effective = w.adjoint() * h.as_matrix();
    let wh = w.adjoint();
    let amplitude: Vec<f64> = p.as_slice().iter().map(|pi| pi.sqrt()).collect();
    let noise_scale = (scenario.noise_power() / 2.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut symbols = vec![Complex64::default(); m];
    let mut noise = vec![Complex64::default(); n];
    let mut signal = vec![0.0; m];
    let mut interference = vec![0.0; m];
    let mut noise_acc = vec![0.0; m];
    let mut residual = vec![0.0; m];

    for _ in 0..num_symbols {
        for (s, a) in symbols.iter_mut().zip(&amplitude) {
            *s = Complex64::from_polar(*a, rng.random::<f64>() * TAU);
        }
        for z in noise.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z = Complex64::new(re, im) * noise_scale;
        }
        for i in 0..m {
            let desired = effective[(i, i)] * symbols[i];
            let leak: Complex64 = (0..m).filter(|&k| k != i).map(|k| effective[(i, k)] * symbols[k]).sum();
            let combined_noise: Complex64 = (0..n).map(|k| wh[(i, k)] * noise[k]).sum();
            signal[i] += desired.norm_sqr();
            interference[i] += leak.norm_sqr();
            noise_acc[i] += combined_noise.norm_sqr();
            residual[i] += (leak + combined_noise).norm_sqr();
        }
    }

    let count = num_symbols as f64;
    let mean = |v: Vec<f64>| v.into_iter().map(|s| s / count).collect::<Vec<_>>();
    let empirical_sinr = signal.iter().zip(&residual).map(|(s, r)| s / r).collect();
    Ok(UplinkSimulation {
        empirical_sinr,
        signal_power: mean(signal),
        interference_power: mean(interference),
        noise_power: mean(noise_acc),
        num_symbols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::min_powers;
    use crate::scenario::ScenarioConfig;

    const X0: [f64; 4] = [0.0, 1.5, 3.0, 4.5];

    #[test]
    fn interference_is_nulled() {
        let mut cfg = ScenarioConfig::reference();
        cfg.noise_power = 1e-12;
        let s = cfg.validate().unwrap();
        let p = PowerAllocation::new(vec![1.0; 3]);
        let sim = simulate_uplink_sinr(&X0, &s, &p, 2000, 3).unwrap();
        for i in 0..3 {
            assert!(sim.empirical_sinr[i] > 1e8);
            assert!(sim.interference_power[i] < 1e-6 * sim.signal_power[i]);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let s = ScenarioConfig::reference().validate().unwrap();
        let p = min_powers(&X0, &s).unwrap();
        let a = simulate_uplink_sinr(&X0, &s, &p, 500, 11).unwrap();
        let b = simulate_uplink_sinr(&X0, &s, &p, 500, 11).unwrap();
        let c = simulate_uplink_sinr(&X0, &s, &p, 500, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.empirical_sinr, c.empirical_sinr);
    }

    #[test]
    fn zero_power_gives_zero_sinr() {
        let s = ScenarioConfig::reference().validate().unwrap();
        let sim = simulate_uplink_sinr(&X0, &s, &PowerAllocation::new(vec![0.0; 3]), 100, 1).unwrap();
        assert!(sim.empirical_sinr.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = ScenarioConfig::reference().validate().unwrap();
        let p = PowerAllocation::new(vec![1.0; 3]);
        assert!(simulate_uplink_sinr(&X0, &s, &p, 0, 1).is_err());
        assert!(simulate_uplink_sinr(&X0, &s, &PowerAllocation::new(vec![1.0]), 10, 1).is_err());
    }
}
