//! Cross-checks of the objective, its gradient and the ZF identities at
//! random feasible points.
//!
//! Per point: closed-form gradient against central finite differences and
//! against the trace form, the four objective expressions against each other,
//! `‖WᴴH - I‖_F`, the general SINR against the ZF SINR, and the SINR at the
//! minimum powers against the targets. Gradient discrepancies are
//! `max_n |a_n - b_n| / max(|b_n|, 1)`.

use std::path::{Path, PathBuf};

use ma_array::channel::{channel_matrix, gain_matrix_partials, min_powers, sinr_general, sinr_zf, zf_combiner};
use ma_array::objective::{
    gain_eigensystem, gradient_closed_form, gradient_finite_difference, gradient_from_eigensystem, gradient_trace_form,
    objective_faces, Difference, DEFAULT_FD_STEP,
};
use ma_array::scenario::{sample_in_boxes, AntennaPositions, Scenario, ScenarioConfig, ScenarioFile};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::validated;
use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, write_csv, write_json};

pub const FD_TOL: f64 = 1e-5;
pub const TRACE_TOL: f64 = 1e-9;
pub const FACES_TOL: f64 = 1e-9;
pub const ZF_TOL: f64 = 1e-9;
pub const SINR_TOL: f64 = 1e-9;

const MAX_REDRAWS: usize = 1000;

/// Deliberate corruption of the closed-form gradient, used to prove the
/// checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Negate every `∂Z/∂x_n` before it enters the closed form.
    FlipPartialSign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckOptions {
    pub points: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub fault: Option<Fault>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self { points: 100, seed: 1, fd_step: DEFAULT_FD_STEP, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCheck {
    pub point: usize,
    pub objective: f64,
    pub closed_vs_fd: f64,
    pub closed_vs_trace: f64,
    pub objective_spread: f64,
    pub zf_residual: f64,
    pub sinr_identity: f64,
    pub rate_tightness: f64,
}

impl PointCheck {
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let over = |value: f64, tol: f64| !(value <= tol);
        if over(self.closed_vs_fd, FD_TOL) {
            v.push("closed_vs_fd");
        }
        if over(self.closed_vs_trace, TRACE_TOL) {
            v.push("closed_vs_trace");
        }
        if over(self.objective_spread, FACES_TOL) {
            v.push("objective_spread");
        }
        if over(self.zf_residual, ZF_TOL) {
            v.push("zf_residual");
        }
        if over(self.sinr_identity, SINR_TOL) {
            v.push("sinr_identity");
        }
        if over(self.rate_tightness, SINR_TOL) {
            v.push("rate_tightness");
        }
        v
    }
}

/// A failing point with everything needed to re-run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayCase {
    pub scenario: String,
    pub positions: Vec<f64>,
    pub fd_step: f64,
    pub fault: Option<Fault>,
    pub check: PointCheck,
    pub violations: Vec<String>,
}

impl ReplayCase {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        Ok(ScenarioFile::parse(&self.scenario)?)
    }
}

pub struct GradcheckReport {
    pub checks: Vec<PointCheck>,
    /// First failing point, if any.
    pub failure: Option<ReplayCase>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn max_of(&self, f: impl Fn(&PointCheck) -> f64) -> f64 {
        self.checks.iter().map(f).fold(0.0, f64::max)
    }
}

fn rel_discrepancy(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)).fold(0.0, f64::max)
}

fn closed_form(x: &[f64], scenario: &Scenario, fault: Option<Fault>) -> ma_array::Result<Vec<f64>> {
    match fault {
        None => Ok(gradient_closed_form(x, scenario)?.into_inner()),
        Some(Fault::FlipPartialSign) => {
            let eig = gain_eigensystem(x, scenario)?;
            let partials: Vec<_> = gain_matrix_partials(x, scenario).into_iter().map(|p| -p).collect();
            gradient_from_eigensystem(&eig, &partials)
        }
    }
}

/// Runs every check at one point.
pub fn check_point(
    point: usize,
    x: &[f64],
    scenario: &Scenario,
    fd_step: f64,
    fault: Option<Fault>,
) -> ma_array::Result<PointCheck> {
    let closed = closed_form(x, scenario, fault)?;
    let fd = gradient_finite_difference(x, scenario, fd_step, Difference::Central)?;
    let trace = gradient_trace_form(x, scenario)?;
    let faces = objective_faces(x, scenario)?;

    let h = channel_matrix(x, scenario);
    let w = zf_combiner(&h)?;
    let m = h.num_users();
    let identity = DMatrix::<Complex64>::identity(m, m);
    let zf_residual = (w.adjoint() * h.as_matrix() - identity).norm();

    let p = min_powers(x, scenario)?;
    let general = sinr_general(&w, &h, p.as_slice(), scenario.noise_power());
    let zf = sinr_zf(x, scenario, &p)?;
    let sinr_identity = general.iter().zip(&zf).map(|(g, z)| (g - z).abs() / z.abs().max(1.0)).fold(0.0, f64::max);
    let rate_tightness = zf.iter().zip(scenario.epsilons()).map(|(g, e)| (g - e).abs() / e).fold(0.0, f64::max);

    Ok(PointCheck {
        point,
        objective: faces.trace_inverse,
        closed_vs_fd: rel_discrepancy(&closed, fd.as_slice()),
        closed_vs_trace: rel_discrepancy(&closed, trace.as_slice()),
        objective_spread: faces.relative_spread(),
        zf_residual,
        sinr_identity,
        rate_tightness,
    })
}

/// Feasible point `k` of the seeded sequence; singular draws are redrawn from
/// the same stream.
pub fn sample_point(scenario: &Scenario, seed: u64, k: usize) -> Result<AntennaPositions> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    for _ in 0..MAX_REDRAWS {
        let x = sample_in_boxes(scenario.regions(), &mut rng);
        if gain_eigensystem(&x, scenario).is_ok() {
            return Ok(x);
        }
    }
    Err(HarnessError::Input(format!("no non-singular point found in {MAX_REDRAWS} draws")))
}

pub fn run_gradcheck(cfg: &ScenarioConfig, opts: &GradcheckOptions) -> Result<GradcheckReport> {
    if opts.points == 0 {
        return Err(HarnessError::Input("points must be at least 1".into()));
    }
    let scenario = validated(cfg.clone())?;
    let mut checks = Vec::with_capacity(opts.points);
    let mut failure = None;
    for k in 0..opts.points {
        let x = sample_point(&scenario, opts.seed, k)?;
        let check = check_point(k, &x, &scenario, opts.fd_step, opts.fault)?;
        let violations = check.violations();
        if failure.is_none() && !violations.is_empty() {
            failure = Some(ReplayCase {
                scenario: ScenarioFile::to_toml(cfg),
                positions: x.into_inner(),
                fd_step: opts.fd_step,
                fault: opts.fault,
                check: check.clone(),
                violations: violations.iter().map(|s| s.to_string()).collect(),
            });
        }
        checks.push(check);
    }
    Ok(GradcheckReport { checks, failure })
}

/// Re-runs the checks at a recorded point.
pub fn replay(case: &ReplayCase) -> Result<PointCheck> {
    let scenario = validated(case.scenario()?)?;
    Ok(check_point(case.check.point, &case.positions, &scenario, case.fd_step, case.fault)?)
}

pub const FAILURE_FILE: &str = "gradcheck_failure.json";

/// Writes `gradcheck.csv`, plus `gradcheck_failure.json` when a point failed.
pub fn write_gradcheck(report: &GradcheckReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = vec![write_csv(&dir.join("gradcheck.csv"), &report.checks)?];
    if let Some(case) = &report.failure {
        written.push(write_json(&dir.join(FAILURE_FILE), case)?);
    }
    Ok(written)
}
