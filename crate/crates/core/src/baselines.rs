//! Fixed-position (FPA) and random-position (RPA) comparison arrays.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::objective::total_power_objective;
use crate::scenario::{sample_in_boxes, AntennaPositions, Scenario};

/// Redraws allowed for a single RPA sample before giving up.
const MAX_REDRAWS: usize = 1000;

/// Conventional half-wavelength-style array packed at the origin: `x_i = (i-1) d_min`.
pub fn fpa_positions(scenario: &Scenario) -> AntennaPositions {
    let d = scenario.config().min_spacing;
    (0..scenario.num_antennas()).map(|i| i as f64 * d).collect::<Vec<_>>().into()
}

pub fn fpa_power(scenario: &Scenario) -> Result<f64> {
    total_power_objective(&fpa_positions(scenario), scenario)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpaEstimate {
    pub mean_power: f64,
    pub std_error: f64,
    pub num_draws: usize,
    /// Draws discarded because the gain matrix was singular.
    pub rejections: usize,
}

/// Average minimum power over `num_draws` independent uniform placements in the
/// boxes.
///
/// Draw `k` uses its own ChaCha stream (`seed`, stream `k`), so the estimate
/// does not depend on how the draws are scheduled across threads.
pub fn rpa_average_power(scenario: &Scenario, num_draws: usize, seed: u64) -> Result<RpaEstimate> {
    if num_draws == 0 {
        return Err(Error::Dimension("num_draws must be at least 1".into()));
    }
    let draws: Vec<(f64, usize)> = (0..num_draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            for rejected in 0..MAX_REDRAWS {
                let x = sample_in_boxes(scenario.regions(), &mut rng);
                match total_power_objective(&x, scenario) {
                    Ok(f) => return Ok((f, rejected)),
                    Err(Error::SingularGain { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::SingularGain { min: 0.0, max: f64::NAN })
        })
        .collect::<Result<_>>()?;

    let count = num_draws as f64;
    let mean = draws.iter().map(|(f, _)| f).sum::<f64>() / count;
    let std_error = if num_draws > 1 {
        let var = draws.iter().map(|(f, _)| (f - mean).powi(2)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        0.0
    };
    Ok(RpaEstimate { mean_power: mean, std_error, num_draws, rejections: draws.iter().map(|(_, r)| r).sum() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;

    #[test]
    fn fpa_layout() {
        let s = ScenarioConfig::reference().validate().unwrap();
        assert_eq!(fpa_positions(&s).as_slice(), &[0.0, 0.5, 1.0, 1.5]);
        let one = ScenarioConfig {
            num_users: 1,
            num_antennas: 1,
            wavelength: 1.0,
            aoas: vec![0.0],
            noise_power: 1.0,
            rate_targets: vec![1.0],
            span: 1.0,
            min_spacing: 0.5,
        }
        .validate()
        .unwrap();
        assert_eq!(fpa_positions(&one).as_slice(), &[0.0]);
    }

    #[test]
    fn single_draw_mean_is_that_draw() {
        let s = ScenarioConfig::reference().validate().unwrap();
        let est = rpa_average_power(&s, 1, 42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        rng.set_stream(0);
        let x = sample_in_boxes(s.regions(), &mut rng);
        assert_eq!(est.mean_power, total_power_objective(&x, &s).unwrap());
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.rejections, 0);
    }

    #[test]
    fn estimate_is_reproducible_and_seed_independent_within_error() {
        let s = ScenarioConfig::reference().validate().unwrap();
        let a = rpa_average_power(&s, 10_000, 1).unwrap();
        let b = rpa_average_power(&s, 10_000, 1).unwrap();
        assert_eq!(a, b);
        let c = rpa_average_power(&s, 10_000, 2).unwrap();
        let combined = (a.std_error.powi(2) + c.std_error.powi(2)).sqrt();
        assert!((a.mean_power - c.mean_power).abs() <= 3.0 * combined, "{a:?} {c:?}");
        assert!(a.mean_power > 0.0 && a.std_error > 0.0);
    }

    #[test]
    fn zero_draws_is_an_error() {
        let s = ScenarioConfig::reference().validate().unwrap();
        assert!(rpa_average_power(&s, 0, 1).is_err());
    }
}
