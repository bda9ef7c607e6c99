use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ma_array::optimizer::{optimize, OptimizationResult, OptimizationTrace, OptimizerOptions};
use ma_array::scenario::Scenario;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::output::write_csv;

/// One row of a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub step: f64,
    pub grad_norm: f64,
}

pub fn trace_rows(trace: &OptimizationTrace) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| TraceRow { iter: r.iteration, objective: r.objective, step: r.step, grad_norm: r.grad_norm })
        .collect()
}

pub fn write_trace(path: &Path, trace: &OptimizationTrace) -> Result<PathBuf> {
    write_csv(path, &trace_rows(trace))
}

pub fn run_optimize(scenario: &Scenario, opts: &OptimizerOptions) -> Result<OptimizationResult> {
    Ok(optimize(scenario, opts)?)
}

pub fn summarize(result: &OptimizationResult) -> String {
    let trace = &result.trace;
    let mut s = String::new();
    let _ = writeln!(s, "status: {} after {} iteration(s)", trace.status.as_str(), trace.iterations());
    let _ = writeln!(s, "initial f: {:.12e}", trace.records[0].objective);
    let _ = writeln!(s, "final f:   {:.12e}", result.objective);
    let _ = writeln!(s, "powers:    {}", join(result.powers.as_slice()));
    let _ = write!(s, "positions: {}", join(result.positions.as_slice()));
    s
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(", ")
}
