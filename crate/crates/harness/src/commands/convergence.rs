//! Objective traces from the endpoint start for several spans, drawn on one
//! chart.

use std::path::{Path, PathBuf};

use ma_array::optimizer::{optimize, OptimizationResult, OptimizerOptions};
use ma_array::scenario::{InitStrategy, ScenarioConfig};

use super::optimize::write_trace;
use super::validated;
use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, value_tag};
use crate::plot::{line_chart, Series};

pub struct SpanRun {
    pub span: f64,
    pub result: OptimizationResult,
}

pub struct ConvergenceReport {
    pub runs: Vec<SpanRun>,
    /// Human-readable descriptions of failed trend checks.
    pub flags: Vec<String>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.flags.is_empty()
    }
}

pub fn trace_file_name(span: f64) -> String {
    format!("convergence_L{}.csv", value_tag(span))
}

/// Runs the optimizer from the endpoint start for each span.
///
/// Flags a trace that increases anywhere, and a larger span whose final
/// objective exceeds that of a smaller one.
pub fn run_convergence(base: &ScenarioConfig, spans: &[f64], opts: &OptimizerOptions) -> Result<ConvergenceReport> {
    if spans.is_empty() {
        return Err(HarnessError::Input("at least one span is required".into()));
    }
    let opts = OptimizerOptions { init_strategy: InitStrategy::EndpointsUniform, ..opts.clone() };
    let mut runs = Vec::with_capacity(spans.len());
    for &span in spans {
        let scenario = validated(base.clone().with_span(span))?;
        runs.push(SpanRun { span, result: optimize(&scenario, &opts)? });
    }

    let mut flags = Vec::new();
    for run in &runs {
        let rises = run.result.trace.records.windows(2).filter(|w| w[1].objective > w[0].objective).count();
        if rises > 0 {
            flags.push(format!("L={}: objective increased at {rises} step(s)", run.span));
        }
    }
    let mut order: Vec<&SpanRun> = runs.iter().collect();
    order.sort_by(|a, b| a.span.total_cmp(&b.span));
    for pair in order.windows(2) {
        let (small, large) = (pair[0], pair[1]);
        if large.span > small.span && large.result.objective > small.result.objective {
            flags.push(format!(
                "L={} ends at f={:.9e}, above L={} at f={:.9e}",
                large.span, large.result.objective, small.span, small.result.objective
            ));
        }
    }
    Ok(ConvergenceReport { runs, flags })
}

/// Writes one trace CSV per span plus `convergence.svg`.
pub fn write_convergence(report: &ConvergenceReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    for run in &report.runs {
        written.push(write_trace(&dir.join(trace_file_name(run.span)), &run.result.trace)?);
    }
    let series: Vec<Series> = report
        .runs
        .iter()
        .map(|run| Series {
            label: format!("L = {}", run.span),
            points: run.result.trace.records.iter().map(|r| (r.iteration as f64, r.objective)).collect(),
        })
        .collect();
    let svg = dir.join("convergence.svg");
    line_chart(&svg, "Total transmit power per iteration", "iteration", "total power", &series, true)?;
    written.push(svg);
    Ok(written)
}
