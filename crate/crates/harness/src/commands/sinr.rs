//! Monte-Carlo check of the ZF SINR at the minimum powers.

use std::path::{Path, PathBuf};

use ma_array::channel::{min_powers, simulate_uplink_sinr, sinr_zf, PowerAllocation};
use ma_array::optimizer::{optimize, OptimizerOptions};
use ma_array::scenario::{InitStrategy, Scenario};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, write_csv};

/// Empirical SINR at or below this counts as zero for the zero-power check.
pub const ZERO_SINR_TOL: f64 = 1e-12;

/// Allowed relative error: 2%, widened as `5% · sqrt(1000 / n)` for short runs.
pub fn sinr_band(num_symbols: usize) -> f64 {
    (0.05 * (1000.0 / num_symbols as f64).sqrt()).max(0.02)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// The endpoint starting layout.
    Initial,
    /// The optimizer's output from the endpoint start.
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrOptions {
    pub num_symbols: usize,
    pub seed: u64,
    pub placement: Placement,
    pub zero_power: bool,
}

impl Default for SinrOptions {
    fn default() -> Self {
        Self { num_symbols: 1_000_000, seed: 1, placement: Placement::Initial, zero_power: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrRow {
    pub user: usize,
    pub power: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub rel_error: f64,
    pub band: f64,
    pub pass: bool,
}

pub struct SinrReport {
    pub positions: Vec<f64>,
    pub rows: Vec<SinrRow>,
}

impl SinrReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub fn run_validate_sinr(scenario: &Scenario, opts: &SinrOptions, optimizer: &OptimizerOptions) -> Result<SinrReport> {
    if opts.num_symbols == 0 {
        return Err(HarnessError::Input("num_symbols must be at least 1".into()));
    }
    let positions = match opts.placement {
        Placement::Initial => scenario.initial_positions(InitStrategy::EndpointsUniform),
        Placement::Optimized => {
            let o = OptimizerOptions { init_strategy: InitStrategy::EndpointsUniform, ..optimizer.clone() };
            optimize(scenario, &o)?.positions
        }
    };
    let powers = if opts.zero_power {
        PowerAllocation::new(vec![0.0; scenario.num_users()])
    } else {
        min_powers(&positions, scenario)?
    };
    let analytic = sinr_zf(&positions, scenario, &powers)?;
    let sim = simulate_uplink_sinr(&positions, scenario, &powers, opts.num_symbols, opts.seed)?;
    let band = sinr_band(opts.num_symbols);
    let rows = (0..scenario.num_users())
        .map(|i| {
            let empirical = sim.empirical_sinr[i];
            if opts.zero_power {
                let pass = empirical.abs() <= ZERO_SINR_TOL;
                SinrRow {
                    user: i + 1,
                    power: 0.0,
                    analytic: analytic[i],
                    empirical,
                    rel_error: empirical,
                    band: ZERO_SINR_TOL,
                    pass,
                }
            } else {
                let rel_error = (empirical - analytic[i]).abs() / analytic[i];
                let power = powers.as_slice()[i];
                SinrRow {
                    user: i + 1,
                    power,
                    analytic: analytic[i],
                    empirical,
                    rel_error,
                    band,
                    pass: rel_error <= band,
                }
            }
        })
        .collect();
    Ok(SinrReport { positions: positions.into_inner(), rows })
}

pub fn write_sinr(report: &SinrReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    Ok(vec![write_csv(&dir.join("sinr.csv"), &report.rows)?])
}
