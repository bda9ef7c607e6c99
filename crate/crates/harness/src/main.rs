use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ma_array::objective::DEFAULT_FD_STEP;
use ma_array::optimizer::{OptimizerOptions, SufficientDecrease};
use ma_array::scenario::InitStrategy;
use ma_harness::commands::complexity::{run_complexity, write_complexity, ComplexityParams};
use ma_harness::commands::convergence::{run_convergence, write_convergence};
use ma_harness::commands::gradcheck::{
    self, replay, run_gradcheck, write_gradcheck, Fault, GradcheckOptions, ReplayCase,
};
use ma_harness::commands::optimize::{run_optimize, summarize, write_trace};
use ma_harness::commands::sinr::{run_validate_sinr, write_sinr, Placement, SinrOptions};
use ma_harness::commands::sweep::{run_sweep, write_sweep, SweepSpec};
use ma_harness::commands::{load_scenario, validated};
use ma_harness::output::{ensure_dir, write_metadata};
use ma_harness::Result;
use serde_json::json;

#[derive(Parser)]
#[command(name = "ma-array", version, about = "Movable-antenna uplink power minimization")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file (the built-in reference scenario when omitted)
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output directory for CSV tables, summaries and charts
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1.0)]
    delta0: f64,
    #[arg(long, global = true, default_value_t = 0.5)]
    rho: f64,
    /// Stop when |Δf| falls to this value (accepts `inf`)
    #[arg(long, global = true, default_value_t = 1e-7)]
    tau: f64,
    #[arg(long, global = true, default_value_t = 1000)]
    max_outer: usize,
    #[arg(long, global = true, default_value_t = 50)]
    max_inner: usize,
    /// Line-search acceptance test
    #[arg(long, global = true, value_enum, default_value_t = Acceptance::Armijo)]
    acceptance: Acceptance,
    /// Coefficient of the Armijo test
    #[arg(long, global = true, default_value_t = 1e-4)]
    armijo_c: f64,
    /// Starting layout of single optimizer runs
    #[arg(long, global = true, value_enum, default_value_t = Init::Endpoints)]
    init: Init,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Acceptance {
    /// f(x⁺) ≤ f(x) + c ∇fᵀ(x⁺ - x)
    Armijo,
    /// f(x⁺) ≤ f(x) - δ‖∇f‖²
    Unit,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Endpoints,
    Midpoint,
    /// Uniform in the boxes, seeded by --seed
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one scenario and print the result
    Optimize,
    /// Objective traces from the endpoint start for several spans
    Convergence {
        #[arg(long, value_delimiter = ',', default_values_t = [2.5, 3.5, 4.5])]
        spans: Vec<f64>,
    },
    /// Sweep one parameter and compare against the FPA and RPA baselines
    Sweep {
        /// Sweep spec TOML file
        #[arg(long)]
        spec: PathBuf,
    },
    /// Flop estimates of the closed-form and definition-based gradients
    Complexity {
        #[arg(long, default_value_t = 1)]
        m_min: usize,
        #[arg(long, default_value_t = 10)]
        m_max: usize,
        #[arg(long, default_value_t = 30)]
        antennas: usize,
        #[arg(long, default_value_t = 10)]
        t_outer: usize,
        #[arg(long, default_value_t = 10)]
        t_inner: usize,
    },
    /// Cross-check gradients, objective expressions and ZF identities
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_FD_STEP)]
        fd_step: f64,
        /// Re-run a point saved by a failed check
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Monte-Carlo SINR at the minimum powers against the analytic value
    ValidateSinr {
        #[arg(long, default_value_t = 1_000_000)]
        symbols: usize,
        /// Simulate at the optimized layout instead of the starting one
        #[arg(long)]
        optimized: bool,
        /// Transmit nothing; every empirical SINR must be zero
        #[arg(long)]
        zero_power: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipDzSign,
}

impl Common {
    fn optimizer(&self) -> OptimizerOptions {
        let acceptance = match self.acceptance {
            Acceptance::Armijo => SufficientDecrease::Armijo { c: self.armijo_c },
            Acceptance::Unit => SufficientDecrease::Unit,
        };
        let init_strategy = match self.init {
            Init::Endpoints => InitStrategy::EndpointsUniform,
            Init::Midpoint => InitStrategy::Midpoint,
            Init::Random => InitStrategy::SeededRandom(self.seed),
        };
        OptimizerOptions {
            delta0: self.delta0,
            rho: self.rho,
            tau: self.tau,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            init_strategy,
            acceptance,
            ..Default::default()
        }
    }
}

/// Writes outputs plus the metadata sidecar when `--out` was given.
fn emit(
    out: Option<&Path>,
    command: &str,
    params: serde_json::Value,
    write: impl FnOnce(&Path) -> Result<Vec<PathBuf>>,
) -> Result<()> {
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let files = write(dir)?;
        write_metadata(dir, command, params, &files)?;
        for f in &files {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn verdict(passed: bool) -> bool {
    println!("{}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn run(cli: Cli) -> Result<bool> {
    let c = &cli.common;
    let Format::Csv = c.format;
    let opts = c.optimizer();
    opts.validate()?;
    let out = c.out.as_deref();
    let scenario_param = c.scenario.as_ref().map(|p| p.display().to_string());
    let base_params = json!({
        "scenario": scenario_param,
        "seed": c.seed,
        "delta0": opts.delta0,
        "rho": opts.rho,
        "tau": opts.tau,
        "max_outer": opts.max_outer,
        "max_inner": opts.max_inner,
        "acceptance": opts.acceptance,
        "init_strategy": opts.init_strategy,
    });

    match cli.command {
        Command::Optimize => {
            let scenario = validated(load_scenario(c.scenario.as_deref())?)?;
            let result = run_optimize(&scenario, &opts)?;
            println!("{}", summarize(&result));
            emit(out, "optimize", base_params, |dir| Ok(vec![write_trace(&dir.join("trace.csv"), &result.trace)?]))?;
            Ok(true)
        }
        Command::Convergence { spans } => {
            let base = load_scenario(c.scenario.as_deref())?;
            let report = run_convergence(&base, &spans, &opts)?;
            for run in &report.runs {
                println!(
                    "L={}: {} after {} iteration(s), f {:.9e} -> {:.9e}",
                    run.span,
                    run.result.trace.status.as_str(),
                    run.result.trace.iterations(),
                    run.result.trace.records[0].objective,
                    run.result.objective
                );
            }
            for flag in &report.flags {
                println!("FLAG {flag}");
            }
            let params = json!({ "common": base_params, "spans": spans });
            emit(out, "convergence", params, |dir| write_convergence(&report, dir))?;
            Ok(verdict(report.passed()))
        }
        Command::Sweep { spec } => {
            let sweep = SweepSpec::load(&spec)?;
            let report = run_sweep(&sweep, &opts)?;
            println!(
                "{:>10} {:>16} {:>16} {:>16} {:>12} {:>6}  status",
                "value", "proposed", "fpa", "rpa_mean", "rpa_se", "iters"
            );
            for r in &report.records {
                println!(
                    "{:>10} {:>16.9e} {:>16.9e} {:>16.9e} {:>12.3e} {:>6}  {}",
                    r.value, r.proposed, r.fpa, r.rpa_mean, r.rpa_se, r.iters, r.status
                );
            }
            for check in &report.summary.checks {
                println!("{}: {} {:?}", check.name, if check.passed { "ok" } else { "violated" }, check.violations);
            }
            let params = json!({ "common": base_params, "spec": spec.display().to_string(), "seeds": sweep.seeds, "rpa_draws": sweep.rpa_draws });
            emit(out, "sweep", params, |dir| write_sweep(&report, dir))?;
            Ok(verdict(report.summary.passed))
        }
        Command::Complexity { m_min, m_max, antennas, t_outer, t_inner } => {
            let params = ComplexityParams { m_min, m_max, num_antennas: antennas, t_outer, t_inner };
            let report = run_complexity(&params)?;
            println!("{:>4} {:>14} {:>16} {:>10}", "M", "closed_form", "definition_based", "ratio");
            for r in &report.rows {
                println!("{:>4} {:>14} {:>16} {:>10.6}", r.m, r.closed_form, r.definition_based, r.ratio);
            }
            for flag in &report.flags {
                println!("FLAG {flag}");
            }
            emit(out, "complexity", json!(params), |dir| write_complexity(&report, dir))?;
            Ok(verdict(report.passed()))
        }
        Command::Gradcheck { points, fd_step, replay: replay_path, inject_fault } => {
            if let Some(path) = replay_path {
                let case = ReplayCase::load(&path)?;
                let check = replay(&case)?;
                println!("{}", serde_json::to_string_pretty(&check)?);
                let violations = check.violations();
                if !violations.is_empty() {
                    println!("violated: {}", violations.join(", "));
                }
                return Ok(verdict(violations.is_empty()));
            }
            let cfg = load_scenario(c.scenario.as_deref())?;
            let fault = inject_fault.map(|FaultArg::FlipDzSign| Fault::FlipPartialSign);
            let report = run_gradcheck(&cfg, &GradcheckOptions { points, seed: c.seed, fd_step, fault })?;
            println!("points:           {}", report.checks.len());
            println!("closed vs FD:     {:.3e} (tol {:e})", report.max_of(|p| p.closed_vs_fd), gradcheck::FD_TOL);
            println!("closed vs trace:  {:.3e} (tol {:e})", report.max_of(|p| p.closed_vs_trace), gradcheck::TRACE_TOL);
            println!(
                "objective spread: {:.3e} (tol {:e})",
                report.max_of(|p| p.objective_spread),
                gradcheck::FACES_TOL
            );
            println!("ZF residual:      {:.3e} (tol {:e})", report.max_of(|p| p.zf_residual), gradcheck::ZF_TOL);
            println!("SINR identity:    {:.3e} (tol {:e})", report.max_of(|p| p.sinr_identity), gradcheck::SINR_TOL);
            println!("rate tightness:   {:.3e} (tol {:e})", report.max_of(|p| p.rate_tightness), gradcheck::SINR_TOL);
            if let Some(case) = &report.failure {
                println!("first failure at point {}: {}", case.check.point, case.violations.join(", "));
                if out.is_none() {
                    println!("{}", serde_json::to_string_pretty(case)?);
                }
            }
            let params = json!({ "common": base_params, "points": points, "fd_step": fd_step, "fault": fault });
            emit(out, "gradcheck", params, |dir| write_gradcheck(&report, dir))?;
            Ok(verdict(report.passed()))
        }
        Command::ValidateSinr { symbols, optimized, zero_power } => {
            let scenario = validated(load_scenario(c.scenario.as_deref())?)?;
            let placement = if optimized { Placement::Optimized } else { Placement::Initial };
            let sinr_opts = SinrOptions { num_symbols: symbols, seed: c.seed, placement, zero_power };
            let report = run_validate_sinr(&scenario, &sinr_opts, &opts)?;
            println!(
                "{:>4} {:>16} {:>16} {:>16} {:>10} {:>8}",
                "user", "power", "analytic", "empirical", "rel_error", "band"
            );
            for r in &report.rows {
                println!(
                    "{:>4} {:>16.9e} {:>16.9e} {:>16.9e} {:>10.3e} {:>8.4}",
                    r.user, r.power, r.analytic, r.empirical, r.rel_error, r.band
                );
            }
            let params =
                json!({ "common": base_params, "symbols": symbols, "placement": placement, "zero_power": zero_power });
            emit(out, "validate-sinr", params, |dir| write_sinr(&report, dir))?;
            Ok(verdict(report.passed()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
