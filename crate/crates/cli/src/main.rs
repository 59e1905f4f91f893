//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 computation or input error. Errors
//! go to stderr as `error: <reason>: <message>`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use robust_se::bounds::{alpha_star, BoundReport};
use robust_se::decoder::io::{parse_problem, write_solution};
use robust_se::decoder::{solve, Mode};
use robust_se::estimator::{estimate, EstimatorConfig};
use robust_se::experiments::{
    grid, run_exp1_lambda_sweep, run_exp1_rho_sweep, run_exp2, summary_to_csv, trials_to_csv, BadSpec, Exp1Config,
    Exp2Config, ExperimentOutput, Sweep,
};
use robust_se::powerflow::{evaluate_h, parse_case, parse_measurement, parse_measurements, parse_state, write_measurements, write_state};

#[derive(Parser)]
#[command(name = "robust-se", version, about = "Robust state estimation with sparse bad data and dense noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the recovery-bound report for one (delta, rho)
    Bounds {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        rho: f64,
    },
    /// CSV of alpha* against delta
    AlphaCurve {
        /// Range `a:b:step`
        #[arg(long)]
        deltas: String,
    },
    /// CSV of the amplification factor against rho at fixed delta
    VarpiCurve {
        #[arg(long)]
        delta: f64,
        /// Range `a:b:step`
        #[arg(long)]
        rhos: String,
    },
    /// Solve a decoding problem file
    Decode {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, conflicts_with = "lambda", required_unless_present = "lambda")]
        epsilon: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
    },
    /// Nonlinear state estimation on a case file
    Estimate {
        #[arg(long)]
        case: PathBuf,
        /// CSV `measurement,value`
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long)]
        lambda: f64,
    },
    /// Gaussian-matrix experiment
    Exp1(Exp1Args),
    /// Power-network experiment
    Exp2(Exp2Args),
    /// Evaluate h(x) for a case and a state CSV
    PowerflowEval {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        state: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Sigma,
    Rho,
}

#[derive(Args)]
struct Exp1Args {
    #[arg(long)]
    seed: u64,
    /// `sigma`: lambda* against noise level with sign flips; `rho`: error against
    /// the fraction of Gaussian errors
    #[arg(long, value_enum, default_value = "sigma")]
    sweep: SweepKind,
    /// Sweep values `a:b:step` (default 0:1.4:0.2 for sigma, 0:0.2:0.04 for rho)
    #[arg(long)]
    values: Option<String>,
    /// Lambda grid `a:b:step` (default 0:13:0.5 for sigma, 0.05,8,15 for rho)
    #[arg(long)]
    lambdas: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    /// Write the summary CSV here
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct Exp2Args {
    #[arg(long)]
    seed: u64,
    /// Case file; without it a synthetic network is generated
    #[arg(long)]
    case: Option<PathBuf>,
    /// Bus count of the synthetic network
    #[arg(long, default_value_t = 14)]
    buses: usize,
    #[arg(long, default_value_t = 1)]
    case_seed: u64,
    /// `sigma`: sign-flipped list at varying noise; `rho`: random Gaussian errors
    #[arg(long, value_enum, default_value = "sigma")]
    sweep: SweepKind,
    /// Sweep values `a:b:step` (default 0:0.2:0.05)
    #[arg(long)]
    values: Option<String>,
    /// Lambda grid `a:b:step` (default 0.5:12:0.5 for sigma, 0.5,7,12 for rho)
    #[arg(long)]
    lambdas: Option<String>,
    /// Sign-flipped measurements, `;`-separated (`PI 2;QI 14`); defaults to a
    /// fixed list on the synthetic network and none on a case file
    #[arg(long)]
    flip: Option<String>,
    /// Noise level for a rho sweep
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Standard deviation of random errors in a rho sweep
    #[arg(long, default_value_t = 0.7)]
    error_std: f64,
    #[arg(long)]
    runs: Option<usize>,
    /// Write the summary CSV here
    #[arg(long)]
    summary: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Compute { reason: &'static str, message: String },
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn compute(reason: &'static str, msg: impl ToString) -> Failure {
    Failure::Compute { reason, message: msg.to_string() }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: usage: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compute { reason, message }) => {
            eprintln!("error: {reason}: {message}");
            ExitCode::from(2)
        }
    }
}

/// Parses `a:b:step` (inclusive) or a comma-separated list.
fn parse_range(text: &str) -> Result<Vec<f64>, Failure> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| usage(format!("`{t}` is not a number in `{text}`")));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => text.split(',').map(num).collect(),
        3 => {
            let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(a.is_finite() && b.is_finite() && step.is_finite() && step > 0.0 && b >= a) {
                return Err(usage(format!("range `{text}` needs a <= b and step > 0")));
            }
            Ok(grid(a, b, step))
        }
        _ => Err(usage(format!("range `{text}` is not `a:b:step`"))),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| compute("io", format!("{}: {e}", path.display())))
}

fn run(cmd: Command) -> Result<String, Failure> {
    match cmd {
        Command::Bounds { delta, rho } => {
            let report = BoundReport::compute(delta, rho).map_err(|e| usage(e.to_string()))?;
            Ok(format!("{}\n", report.to_line()))
        }
        Command::AlphaCurve { deltas } => {
            let mut out = String::from("delta,alpha_star\n");
            for d in parse_range(&deltas)? {
                if !(d > 0.0 && d < 1.0) {
                    return Err(usage(format!("delta={d} outside (0, 1)")));
                }
                let _ = writeln!(out, "{d},{}", alpha_star(d));
            }
            Ok(out)
        }
        Command::VarpiCurve { delta, rhos } => {
            let mut out = String::from("delta,rho,alpha_star,c,sigma_min_normalized,varpi,feasible\n");
            for r in parse_range(&rhos)? {
                let b = BoundReport::compute(delta, r).map_err(|e| usage(e.to_string()))?;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    b.delta, b.rho, b.alpha_star, b.c_constant, b.sigma_min_normalized, b.varpi, b.feasible
                );
            }
            Ok(out)
        }
        Command::Decode { problem, epsilon, lambda, tol, max_iter } => {
            let mode = match (epsilon, lambda) {
                (Some(e), None) => Mode::Constrained { epsilon: e },
                (None, Some(l)) => Mode::Lagrangian { lambda: l },
                _ => return Err(usage("give exactly one of --epsilon and --lambda")),
            };
            let p = parse_problem::<f64>(&read(&problem)?).map_err(|e| compute("parse", e))?;
            let p = p.with_mode(mode).map_err(|e| usage(e.to_string()))?;
            let s = solve(&p, tol, max_iter).map_err(|e| usage(e.to_string()))?;
            eprintln!(
                "objective={} iterations={} kkt_violation={:e} converged={}",
                s.objective, s.iterations, s.certificate_gap, s.converged
            );
            let s = s.ensure_converged().map_err(|e| compute("not_converged", e))?;
            Ok(write_solution(&s))
        }
        Command::Estimate { case, measurements, lambda } => {
            let (net, plan) = parse_case::<f64>(&read(&case)?).map_err(|e| compute("parse", e))?;
            let y = parse_measurements(&net, &plan, &read(&measurements)?).map_err(|e| compute("parse", e))?;
            let r = estimate(&net, &plan, &y, &EstimatorConfig::new(lambda)).map_err(|e| match e {
                robust_se::estimator::EstimateError::Config(m) => usage(m),
                other => compute("estimate", other),
            })?;
            eprintln!(
                "outer_iterations={} converged={} objective={} last_step={:e}",
                r.outer_iterations,
                r.converged,
                r.final_objective,
                r.per_iteration_step_norms.last().copied().unwrap_or(0.0)
            );
            if !r.converged {
                return Err(compute("not_converged", format!("no convergence in {} outer iterations", r.outer_iterations)));
            }
            Ok(write_state(&net, &r.x_hat))
        }
        Command::PowerflowEval { case, state } => {
            let (net, plan) = parse_case::<f64>(&read(&case)?).map_err(|e| compute("parse", e))?;
            let x = parse_state(&net, &read(&state)?).map_err(|e| compute("parse", e))?;
            Ok(write_measurements(&net, &plan, &evaluate_h(&net, &plan, &x)))
        }
        Command::Exp1(a) => exp1(a),
        Command::Exp2(a) => exp2(a),
    }
}

fn emit(out: ExperimentOutput, summary: Option<PathBuf>) -> Result<String, Failure> {
    if let Some(path) = summary {
        std::fs::write(&path, summary_to_csv(&out.summary)).map_err(|e| compute("io", format!("{}: {e}", path.display())))?;
    }
    Ok(trials_to_csv(&out.records))
}

fn exp1(a: Exp1Args) -> Result<String, Failure> {
    let mut cfg = match a.sweep {
        SweepKind::Sigma => Exp1Config::lambda_sweep(),
        SweepKind::Rho => Exp1Config::rho_sweep(),
    };
    if let Some(l) = &a.lambdas {
        cfg.lambda_grid = parse_range(l)?;
    }
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    let out = match a.sweep {
        SweepKind::Sigma => {
            let values = parse_range(a.values.as_deref().unwrap_or("0:1.4:0.2"))?;
            run_exp1_lambda_sweep(&cfg, &values, a.seed)
        }
        SweepKind::Rho => {
            let values = parse_range(a.values.as_deref().unwrap_or("0:0.2:0.04"))?;
            run_exp1_rho_sweep(&cfg, &values, a.seed)
        }
    }
    .map_err(|e| usage(e.to_string()))?;
    emit(out, a.summary)
}

fn exp2(a: Exp2Args) -> Result<String, Failure> {
    let mut cfg = match &a.case {
        Some(path) => {
            let (net, plan) = parse_case::<f64>(&read(path)?).map_err(|e| compute("parse", e))?;
            Exp2Config::new(net, plan)
        }
        None if a.buses < 6 => return Err(usage("--buses must be at least 6")),
        None => Exp2Config::synthetic(a.buses, a.case_seed),
    };
    if let Some(list) = &a.flip {
        let parsed = list
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_measurement(&cfg.net, s.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| usage(e.to_string()))?;
        cfg.bad = BadSpec::FixedList(parsed);
    }
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    let values = parse_range(a.values.as_deref().unwrap_or("0:0.2:0.05"))?;
    let sweep = match a.sweep {
        SweepKind::Sigma => Sweep::Sigma(values),
        SweepKind::Rho => {
            cfg.sigma = a.sigma;
            cfg.bad = BadSpec::Random { rho: 0.0, std: a.error_std };
            cfg.lambda_grid = vec![0.5, 7.0, 12.0];
            Sweep::Rho(values)
        }
    };
    if let Some(l) = &a.lambdas {
        cfg.lambda_grid = parse_range(l)?;
    }
    let out = run_exp2(&cfg, &sweep, a.seed).map_err(|e| usage(e.to_string()))?;
    emit(out, a.summary)
}
