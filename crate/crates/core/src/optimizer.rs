//! Projected gradient descent over the antenna boxes.
//!
//! Each outer iteration evaluates `f` and its closed-form gradient at `x_t`,
//! then backtracks `δ ∈ {δ₀, ρδ₀, ρ²δ₀, …}` until the projected trial point
//! `x⁺ = B(x_t - δ∇f)` passes the configured [`SufficientDecrease`] test. The
//! loop stops when `|f(x_{t+1}) - f(x_t)| ≤ τ`.
//!
//! [`SufficientDecrease::Unit`] is the test `f(x⁺) ≤ f(x_t) - δ‖∇f‖²`. It asks
//! for the full first-order decrease, so wherever `f` curves upward along the
//! step it only passes once `δ‖∇f‖²` drops below the rounding error of `f`.
//! The default [`SufficientDecrease::Armijo`] test compares against
//! `c ∇fᵀ(x⁺ - x_t)` instead, which accounts for clamped coordinates and
//! accepts real steps.

use serde::{Deserialize, Serialize};

use crate::channel::{min_powers, PowerAllocation};
use crate::error::{Error, Result};
use crate::objective::{evaluate, total_power_objective, DegeneratePolicy, Gradient, GradientRoute};
use crate::scenario::{AntennaPositions, FeasibleRegions, InitStrategy, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    /// Initial trial step of every line search.
    pub delta0: f64,
    /// Step shrink factor, `0 < ρ < 1`.
    pub rho: f64,
    /// Absolute objective-change threshold.
    pub tau: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub init_strategy: InitStrategy,
    pub degenerate_policy: DegeneratePolicy,
    pub acceptance: SufficientDecrease,
}

/// Line-search acceptance test for a projected trial point `x⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SufficientDecrease {
    /// `f(x⁺) ≤ f(x) - δ‖∇f(x)‖²`.
    Unit,
    /// `f(x⁺) ≤ f(x) + c ∇f(x)ᵀ(x⁺ - x)` with `0 < c < 1`.
    Armijo { c: f64 },
}

impl Default for SufficientDecrease {
    fn default() -> Self {
        Self::Armijo { c: 1e-4 }
    }
}

impl SufficientDecrease {
    /// Decrease that `x⁺` must achieve relative to `f(x)`.
    pub fn required_decrease(self, step: f64, gradient: &[f64], x: &[f64], x_plus: &[f64]) -> f64 {
        match self {
            Self::Unit => step * gradient.iter().map(|g| g * g).sum::<f64>(),
            Self::Armijo { c } => {
                let directional: f64 = gradient.iter().zip(x_plus.iter().zip(x)).map(|(g, (p, q))| g * (p - q)).sum();
                -c * directional
            }
        }
    }
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            delta0: 1.0,
            rho: 0.5,
            tau: 1e-7,
            max_outer: 1000,
            max_inner: 50,
            init_strategy: InitStrategy::EndpointsUniform,
            degenerate_policy: DegeneratePolicy::TraceFallback,
            acceptance: SufficientDecrease::default(),
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            problems.push(format!("delta0 must be positive and finite (got {})", self.delta0));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            problems.push(format!("rho must lie in (0, 1) (got {})", self.rho));
        }
        if !(self.tau >= 0.0) {
            problems.push(format!("tau must be non-negative (got {})", self.tau));
        }
        if self.max_outer == 0 {
            problems.push("max_outer must be at least 1".into());
        }
        if let SufficientDecrease::Armijo { c } = self.acceptance {
            if !(c > 0.0 && c < 1.0) {
                problems.push(format!("Armijo coefficient must lie in (0, 1) (got {c})"));
            }
        }
        if self.max_inner == 0 {
            problems.push("max_inner must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Options(problems.join("; ")))
        }
    }
}

/// One row of the optimization trace.
///
/// Row 0 is the starting point (`step` and `grad_norm` are zero). Row `t ≥ 1`
/// is `x_t`, produced from `x_{t-1}` with step `step` along a gradient of norm
/// `grad_norm`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub step: f64,
    pub grad_norm: f64,
    /// Decrease the acceptance test demanded for this step.
    pub required_decrease: f64,
    pub positions: Vec<f64>,
    pub trials: usize,
    /// Complex-multiplication estimate for the iteration that produced this row.
    pub flops: f64,
    pub used_trace_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationStatus {
    /// `|Δf| ≤ τ`.
    Converged,
    /// No step length passed the sufficient-decrease test.
    LineSearchExhausted,
    OuterCap,
    Error,
}

impl TerminationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::LineSearchExhausted => "line_search_exhausted",
            Self::OuterCap => "outer_cap",
            Self::Error => "error",
        }
    }

    /// Converged, or stopped at a point the line search cannot improve.
    pub fn is_stationary(self) -> bool {
        matches!(self, Self::Converged | Self::LineSearchExhausted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub records: Vec<IterationRecord>,
    pub status: TerminationStatus,
}

impl OptimizationTrace {
    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub positions: AntennaPositions,
    pub objective: f64,
    pub powers: PowerAllocation,
    pub trace: OptimizationTrace,
}

/// Nearest point of the feasible set: clamp every coordinate into its box.
pub fn project(x: &[f64], regions: &FeasibleRegions) -> AntennaPositions {
    regions.clamp(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub positions: AntennaPositions,
    pub objective: f64,
    pub step: f64,
    pub required_decrease: f64,
    pub trials: usize,
}

/// Backtracking line search from `x_t` along `-g`.
///
/// Trial points where `Z` is singular count as failed trials.
pub fn backtracking_step(
    x_t: &[f64],
    g: &Gradient,
    f_t: f64,
    opts: &OptimizerOptions,
    scenario: &Scenario,
) -> Result<LineSearchOutcome> {
    let grad = g.as_slice();
    let regions = scenario.regions();
    let mut delta = opts.delta0;
    let mut trial = vec![0.0; x_t.len()];
    for trials in 1..=opts.max_inner {
        for ((t, x), gi) in trial.iter_mut().zip(x_t).zip(grad) {
            *t = x - delta * gi;
        }
        let candidate = project(&trial, regions);
        if let Ok(f_new) = total_power_objective(&candidate, scenario) {
            let required = opts.acceptance.required_decrease(delta, grad, x_t, &candidate);
            if f_new <= f_t - required {
                return Ok(LineSearchOutcome {
                    positions: candidate,
                    objective: f_new,
                    step: delta,
                    required_decrease: required,
                    trials,
                });
            }
        }
        delta *= opts.rho;
    }
    Err(Error::LineSearchExhausted { trials: opts.max_inner })
}

/// Runs projected gradient descent from the configured initial strategy.
pub fn optimize(scenario: &Scenario, opts: &OptimizerOptions) -> Result<OptimizationResult> {
    let x0 = scenario.initial_positions(opts.init_strategy);
    optimize_from(scenario, opts, x0)
}

/// Runs projected gradient descent from `x0` (projected onto the boxes first).
pub fn optimize_from(scenario: &Scenario, opts: &OptimizerOptions, x0: AntennaPositions) -> Result<OptimizationResult> {
    opts.validate()?;
    let m = scenario.num_users();
    let n = scenario.num_antennas();
    let mut x = project(&x0, scenario.regions());

    let at = |iteration: usize| move |e: Error| Error::AtIteration { iteration, source: Box::new(e) };

    let mut current = evaluate(&x, scenario, opts.degenerate_policy).map_err(at(0))?;
    let mut records = vec![IterationRecord {
        iteration: 0,
        objective: current.objective,
        step: 0.0,
        grad_norm: 0.0,
        required_decrease: 0.0,
        positions: x.to_vec(),
        trials: 0,
        flops: 0.0,
        used_trace_fallback: false,
    }];

    let mut status = TerminationStatus::OuterCap;
    for t in 1..=opts.max_outer {
        let f_t = current.objective;
        let step = match backtracking_step(&x, &current.gradient, f_t, opts, scenario) {
            Ok(step) => step,
            Err(Error::LineSearchExhausted { .. }) => {
                status = TerminationStatus::LineSearchExhausted;
                break;
            }
            Err(e) => return Err(at(t)(e)),
        };
        records.push(IterationRecord {
            iteration: t,
            objective: step.objective,
            step: step.step,
            grad_norm: current.gradient.norm(),
            required_decrease: step.required_decrease,
            positions: step.positions.to_vec(),
            trials: step.trials,
            flops: flop_count_estimate(m, n, 1, step.trials, GradientMethod::ClosedForm),
            used_trace_fallback: current.gradient.route() == GradientRoute::TraceFallback,
        });
        x = step.positions;
        let converged = (step.objective - f_t).abs() <= opts.tau;
        if converged {
            status = TerminationStatus::Converged;
            break;
        }
        current = evaluate(&x, scenario, opts.degenerate_policy).map_err(at(t))?;
    }

    let objective = records.last().expect("trace has a starting row").objective;
    let powers = min_powers(&x, scenario)?;
    Ok(OptimizationResult { positions: x, objective, powers, trace: OptimizationTrace { records, status } })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    ClosedForm,
    DefinitionBased,
}

/// Complex-multiplication count of the whole descent.
///
/// Closed form: `T_outer (M³ + M²N + T_inner N)`.
/// Definition based: `T_outer (M³ + M³N + T_inner N)`.
pub fn flop_count_estimate(m: usize, n: usize, t_outer: usize, t_inner: usize, method: GradientMethod) -> f64 {
    let (m, n, t_outer, t_inner) = (m as f64, n as f64, t_outer as f64, t_inner as f64);
    let gradient = match method {
        GradientMethod::ClosedForm => m * m * n,
        GradientMethod::DefinitionBased => m * m * m * n,
    };
    t_outer * (m * m * m + gradient + t_inner * n)
}
