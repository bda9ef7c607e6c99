//! Parameter sweeps comparing the optimized array with the FPA and RPA
//! baselines.
//!
//! Sweep specs are TOML:
//!
//! ```toml
//! parameter = "num_antennas"        # or "rate_target", "span"
//! values = [4, 5, 6, 7, 8]           # strictly increasing
//! scenario = "reference.toml"        # relative to this file; or an inline [base] table
//! seeds = [1, 2, 3]                  # one random start each; the first also seeds RPA
//! rpa_draws = 10000
//! ```
//!
//! With neither `scenario` nor `[base]` the built-in reference scenario is
//! used. The optimized power at a point is the best of the endpoint start, the
//! midpoint start and one seeded random start per entry of `seeds`.

use std::path::{Path, PathBuf};

use ma_array::baselines::{fpa_power, rpa_average_power};
use ma_array::optimizer::{optimize, OptimizationResult, OptimizerOptions};
use ma_array::scenario::{InitStrategy, ScenarioConfig, ScenarioFile};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::output::{derive_seed, ensure_dir, write_csv, write_json};
use crate::plot::{line_chart, Series};

pub const DEFAULT_RPA_DRAWS: usize = 10_000;

/// Relative gap between the last two optimized powers of a span sweep that
/// still counts as a plateau.
pub const PLATEAU_TOL: f64 = 0.01;

/// Smallest span, in wavelengths, for the two plateau points.
pub const PLATEAU_MIN_SPAN: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    NumAntennas,
    RateTarget,
    Span,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NumAntennas => "num_antennas",
            Self::RateTarget => "rate_target",
            Self::Span => "span",
        }
    }

    fn apply(self, base: &ScenarioConfig, value: f64) -> ScenarioConfig {
        match self {
            Self::NumAntennas => base.clone().with_antennas(value as usize),
            Self::RateTarget => base.clone().with_uniform_rate(value),
            Self::Span => base.clone().with_span(value),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpecFile {
    parameter: SweepParameter,
    values: Vec<f64>,
    scenario: Option<PathBuf>,
    base: Option<toml::Table>,
    #[serde(default)]
    seeds: Vec<u64>,
    rpa_draws: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub base: ScenarioConfig,
    pub seeds: Vec<u64>,
    pub rpa_draws: usize,
}

impl SweepSpec {
    /// Parses spec text; `dir` resolves a relative `scenario` path.
    pub fn parse(text: &str, dir: &Path) -> Result<Self> {
        let file: SweepSpecFile = toml::from_str(text).map_err(|e| HarnessError::Input(e.to_string()))?;
        let base = match (file.scenario, file.base) {
            (Some(_), Some(_)) => {
                return Err(HarnessError::Input("give either `scenario` or `[base]`, not both".into()));
            }
            (Some(path), None) => ScenarioFile::load(dir.join(path))?,
            (None, Some(table)) => ScenarioFile::parse(&table.to_string())?,
            (None, None) => ScenarioConfig::reference(),
        };
        let spec = Self {
            parameter: file.parameter,
            values: file.values,
            base,
            seeds: file.seeds,
            rpa_draws: file.rpa_draws.unwrap_or(DEFAULT_RPA_DRAWS),
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir).map_err(|e| match e {
            HarnessError::Input(msg) => HarnessError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn check(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.values.is_empty() {
            problems.push("values must not be empty".to_string());
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            problems.push("values must be finite".into());
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            problems.push("values must be strictly increasing".into());
        }
        if self.parameter == SweepParameter::NumAntennas && self.values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
            problems.push("num_antennas values must be positive integers".into());
        }
        if self.rpa_draws == 0 {
            problems.push("rpa_draws must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Input(problems.join("; ")))
        }
    }
}

/// One sweep point. `status` is the optimizer status of the best start,
/// followed by `|`-separated flags such as `fpa_violation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub value: f64,
    pub proposed: f64,
    pub fpa: f64,
    pub rpa_mean: f64,
    pub rpa_se: f64,
    pub iters: usize,
    pub status: String,
}

impl RunRecord {
    fn failed(value: f64, status: String) -> Self {
        Self { value, proposed: f64::NAN, fpa: f64::NAN, rpa_mean: f64::NAN, rpa_se: f64::NAN, iters: 0, status }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Sweep values (or value pairs) where the check failed.
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub parameter: SweepParameter,
    pub points: usize,
    pub failed_points: Vec<f64>,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

pub struct SweepReport {
    pub records: Vec<RunRecord>,
    pub summary: SweepSummary,
}

/// Start points tried at sweep point `index`.
pub fn start_strategies(seeds: &[u64], index: usize) -> Vec<InitStrategy> {
    let mut starts = vec![InitStrategy::EndpointsUniform, InitStrategy::Midpoint];
    starts.extend(seeds.iter().map(|&s| InitStrategy::SeededRandom(derive_seed(s, index as u64))));
    starts
}

/// Best optimizer run over several starts; ties keep the earlier start.
pub fn multi_start(
    scenario: &ma_array::scenario::Scenario,
    opts: &OptimizerOptions,
    starts: &[InitStrategy],
) -> Result<OptimizationResult> {
    let mut best: Option<OptimizationResult> = None;
    let mut last_err = None;
    for &init_strategy in starts {
        match optimize(scenario, &OptimizerOptions { init_strategy, ..opts.clone() }) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.objective < b.objective) {
                    best = Some(r);
                }
            }
            Err(e) => {
                log::warn!("start {init_strategy:?} failed: {e}");
                last_err = Some(e);
            }
        }
    }
    match (best, last_err) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e.into()),
        (None, None) => Err(HarnessError::Input("no start points".into())),
    }
}

fn run_point(spec: &SweepSpec, opts: &OptimizerOptions, index: usize, value: f64) -> RunRecord {
    let scenario = match spec.parameter.apply(&spec.base, value).validate() {
        Ok(s) => s,
        Err(report) => return RunRecord::failed(value, format!("invalid: {report}")),
    };
    let rpa_seed = derive_seed(spec.seeds.first().copied().unwrap_or(0), index as u64);
    let outcome = (|| -> Result<RunRecord> {
        let fpa = fpa_power(&scenario)?;
        let rpa = rpa_average_power(&scenario, spec.rpa_draws, rpa_seed)?;
        let best = multi_start(&scenario, opts, &start_strategies(&spec.seeds, index))?;
        let mut status = vec![best.trace.status.as_str().to_string()];
        if best.objective > fpa {
            status.push("fpa_violation".into());
        }
        if best.objective > rpa.mean_power {
            status.push("rpa_violation".into());
        }
        Ok(RunRecord {
            value,
            proposed: best.objective,
            fpa,
            rpa_mean: rpa.mean_power,
            rpa_se: rpa.std_error,
            iters: best.trace.iterations(),
            status: status.join("|"),
        })
    })();
    outcome.unwrap_or_else(|e| RunRecord::failed(value, format!("error: {e}")))
}

fn strictly(name: &str, records: &[&RunRecord], column: impl Fn(&RunRecord) -> f64, increasing: bool) -> CheckOutcome {
    let violations: Vec<String> = records
        .windows(2)
        .filter(|w| {
            let (a, b) = (column(w[0]), column(w[1]));
            if increasing {
                !(b > a)
            } else {
                !(b < a)
            }
        })
        .map(|w| format!("{}->{}", w[0].value, w[1].value))
        .collect();
    CheckOutcome { name: name.into(), passed: violations.is_empty(), violations }
}

pub fn summarize(parameter: SweepParameter, records: &[RunRecord]) -> SweepSummary {
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.proposed.is_finite()).collect();
    let failed_points: Vec<f64> = records.iter().filter(|r| !r.proposed.is_finite()).map(|r| r.value).collect();

    let mut checks = Vec::new();
    let dominance: Vec<String> =
        ok.iter().filter(|r| r.proposed > r.fpa || r.proposed > r.rpa_mean).map(|r| r.value.to_string()).collect();
    checks.push(CheckOutcome { name: "dominance".into(), passed: dominance.is_empty(), violations: dominance });

    match parameter {
        SweepParameter::NumAntennas => {
            checks.push(strictly("proposed_strictly_decreasing", &ok, |r| r.proposed, false));
        }
        SweepParameter::RateTarget => {
            checks.push(strictly("proposed_strictly_increasing", &ok, |r| r.proposed, true));
            checks.push(strictly("fpa_strictly_increasing", &ok, |r| r.fpa, true));
            checks.push(strictly("rpa_strictly_increasing", &ok, |r| r.rpa_mean, true));
        }
        SweepParameter::Span => {
            let mut violations = Vec::new();
            match ok.as_slice() {
                [.., a, b] if a.value >= PLATEAU_MIN_SPAN => {
                    let gap = (b.proposed - a.proposed).abs() / a.proposed.min(b.proposed);
                    if !(gap < PLATEAU_TOL) {
                        violations.push(format!("{}->{}: relative gap {gap:.3e}", a.value, b.value));
                    }
                }
                _ => violations.push(format!("needs two successful points with span ≥ {PLATEAU_MIN_SPAN}")),
            }
            checks.push(CheckOutcome { name: "plateau".into(), passed: violations.is_empty(), violations });
        }
    }
    let passed = failed_points.is_empty() && checks.iter().all(|c| c.passed);
    SweepSummary { parameter, points: records.len(), failed_points, checks, passed }
}

/// Evaluates every sweep point in parallel. Output order follows `values`.
pub fn run_sweep(spec: &SweepSpec, opts: &OptimizerOptions) -> Result<SweepReport> {
    spec.check()?;
    opts.validate()?;
    let records: Vec<RunRecord> =
        spec.values.par_iter().enumerate().map(|(i, &v)| run_point(spec, opts, i, v)).collect();
    let summary = summarize(spec.parameter, &records);
    Ok(SweepReport { records, summary })
}

/// Writes `sweep.csv`, `sweep_summary.json` and `sweep.svg`.
pub fn write_sweep(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let csv = write_csv(&dir.join("sweep.csv"), &report.records)?;
    let json = write_json(&dir.join("sweep_summary.json"), &report.summary)?;
    let column = |f: fn(&RunRecord) -> f64| report.records.iter().map(|r| (r.value, f(r))).collect::<Vec<_>>();
    let series = vec![
        Series { label: "proposed".into(), points: column(|r| r.proposed) },
        Series { label: "FPA".into(), points: column(|r| r.fpa) },
        Series { label: "RPA".into(), points: column(|r| r.rpa_mean) },
    ];
    let svg = dir.join("sweep.svg");
    let x_label = report.summary.parameter.as_str();
    line_chart(&svg, "Total transmit power", x_label, "total power", &series, true)?;
    Ok(vec![csv, json, svg])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing() {
        let spec = SweepSpec::parse("parameter = \"span\"\nvalues = [2.5, 8, 10]\n", Path::new(".")).unwrap();
        assert_eq!(spec.base, ScenarioConfig::reference());
        assert_eq!(spec.rpa_draws, DEFAULT_RPA_DRAWS);
        assert!(spec.seeds.is_empty());

        let inline = "parameter = \"rate_target\"\nvalues = [1, 2]\nseeds = [4]\n[base]\nnum_users = 1\n\
                      num_antennas = 2\naoas = [0.1]\nnoise_power = 1.0\nrate_targets = [1.0]\nspan = 2.0\nmin_spacing = 0.5\n";
        let spec = SweepSpec::parse(inline, Path::new(".")).unwrap();
        assert_eq!(spec.base.num_antennas, 2);
        assert_eq!(spec.seeds, vec![4]);
    }

    #[test]
    fn spec_rejections() {
        for text in [
            "parameter = \"span\"\nvalues = []\n",
            "parameter = \"span\"\nvalues = [3, 3]\n",
            "parameter = \"span\"\nvalues = [4, 3]\n",
            "parameter = \"num_antennas\"\nvalues = [4.5]\n",
            "parameter = \"span\"\nvalues = [3]\nrpa_draws = 0\n",
            "parameter = \"width\"\nvalues = [3]\n",
            "parameter = \"span\"\nvalues = [3]\nextra = 1\n",
        ] {
            let err = SweepSpec::parse(text, Path::new(".")).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn summary_flags_violations() {
        let rec = |value: f64, proposed: f64| RunRecord {
            value,
            proposed,
            fpa: 2.0,
            rpa_mean: 2.0,
            rpa_se: 0.0,
            iters: 1,
            status: "converged".into(),
        };
        let s = summarize(SweepParameter::NumAntennas, &[rec(4.0, 1.0), rec(5.0, 1.0), rec(6.0, 3.0)]);
        assert!(!s.passed);
        assert_eq!(s.checks[0].violations, vec!["6"]);
        assert_eq!(s.checks[1].violations, vec!["4->5", "5->6"]);

        let s = summarize(SweepParameter::Span, &[rec(8.0, 1.0), rec(10.0, 1.005)]);
        assert!(s.passed);
        let s = summarize(SweepParameter::Span, &[rec(6.0, 1.0), rec(10.0, 1.0)]);
        assert!(!s.passed);
    }

    #[test]
    fn invalid_point_is_recorded_and_sweep_continues() {
        let spec = SweepSpec {
            parameter: SweepParameter::NumAntennas,
            values: vec![2.0, 4.0],
            base: ScenarioConfig::reference(),
            seeds: vec![],
            rpa_draws: 10,
        };
        let report = run_sweep(&spec, &OptimizerOptions::default()).unwrap();
        assert!(report.records[0].status.starts_with("invalid"));
        assert!(report.records[0].status.contains("N < M"));
        assert!(report.records[1].proposed.is_finite());
        assert_eq!(report.summary.failed_points, vec![2.0]);
        assert!(!report.summary.passed);
    }
}
