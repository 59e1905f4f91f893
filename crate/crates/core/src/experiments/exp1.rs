//! Linear decoding with Gaussian `H`.

use rayon::prelude::*;

use crate::decoder::{solve, DecodeProblem, Mode};
use crate::linalg::Matrix;

use super::record::{summarize_best_lambda, summarize_per_run, ExperimentOutput, TrialRecord};
use super::rng::RngStream;
use super::{check_lambdas, check_points, grid, norm_diff, ConfigError, Sweep};

/// How many measurements carry bad data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BadCount {
    Count(usize),
    /// `round(ρ·n)` measurements.
    Fraction(f64),
}

/// What happens to a corrupted measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorModel {
    /// `y_i ← −y_i` before noise is added.
    SignFlip,
    /// `y_i ← y_i + N(0, std²)`.
    Gaussian { std: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp1Config {
    /// Measurements.
    pub n: usize,
    /// State dimension.
    pub m: usize,
    pub bad: BadCount,
    pub error_model: ErrorModel,
    /// Noise standard deviation, where the sweep does not set it.
    pub sigma: f64,
    pub lambda_grid: Vec<f64>,
    pub runs: usize,
    /// KKT tolerance and iteration cap of each decode.
    pub tol: f64,
    pub max_iter: usize,
}

impl Exp1Config {
    /// 150 × 60, twelve sign flips, `λ ∈ {0, 0.5, …, 13}`, 50 runs.
    pub fn lambda_sweep() -> Self {
        Self {
            n: 150,
            m: 60,
            bad: BadCount::Count(12),
            error_model: ErrorModel::SignFlip,
            sigma: 0.0,
            lambda_grid: grid(0.0, 13.0, 0.5),
            runs: 50,
            tol: 1e-8,
            max_iter: 100_000,
        }
    }

    /// 150 × 60, noise `N(0, 0.5²)`, errors `N(0, 5²)`, `λ ∈ {0.05, 8, 15}`, 50 runs.
    pub fn rho_sweep() -> Self {
        Self {
            error_model: ErrorModel::Gaussian { std: 5.0 },
            bad: BadCount::Fraction(0.0),
            sigma: 0.5,
            lambda_grid: vec![0.05, 8.0, 15.0],
            ..Self::lambda_sweep()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |s: String| Err(ConfigError::Invalid(s));
        if self.m == 0 || self.n <= self.m {
            return bad(format!("need n > m >= 1, got n={} m={}", self.n, self.m));
        }
        match self.bad {
            BadCount::Count(k) if k > self.n => return bad(format!("bad count {k} exceeds n={}", self.n)),
            BadCount::Fraction(r) if !(0.0..=1.0).contains(&r) => return bad(format!("rho={r} outside [0, 1]")),
            _ => {}
        }
        if let ErrorModel::Gaussian { std } = self.error_model {
            if !(std.is_finite() && std >= 0.0) {
                return bad(format!("error std must be finite and >= 0, got {std}"));
            }
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return bad(format!("sigma must be finite and >= 0, got {}", self.sigma));
        }
        if self.runs == 0 || self.max_iter == 0 || !(self.tol > 0.0) {
            return bad("runs, max_iter and tol must be positive".into());
        }
        check_lambdas(&self.lambda_grid)
    }
}

/// For every `σ` in `sigmas`: decode each run over the λ grid and report the
/// per-run `λ*` averaged over runs.
pub fn run_exp1_lambda_sweep(cfg: &Exp1Config, sigmas: &[f64], seed: u64) -> Result<ExperimentOutput, ConfigError> {
    let sweep = Sweep::Sigma(sigmas.to_vec());
    let records = run(cfg, &sweep, seed, "exp1-lambda")?;
    let summary = summarize_per_run(&records, "sigma", sigmas);
    Ok(ExperimentOutput { records, summary })
}

/// For every `ρ` in `rhos`: mean error per λ; the summary names the λ with the
/// smallest mean error.
pub fn run_exp1_rho_sweep(cfg: &Exp1Config, rhos: &[f64], seed: u64) -> Result<ExperimentOutput, ConfigError> {
    let sweep = Sweep::Rho(rhos.to_vec());
    let records = run(cfg, &sweep, seed, "exp1-rho")?;
    let summary = summarize_best_lambda(&records, "rho", rhos);
    Ok(ExperimentOutput { records, summary })
}

// Random draws of one trial, shared by every sweep point.
struct Draw {
    h: Matrix<f64>,
    x: Vec<f64>,
    noise: Vec<f64>,
    bad_values: Vec<f64>,
    // corrupted positions in draw order; a prefix of length k is used
    order: Vec<usize>,
}

fn draw(cfg: &Exp1Config, seed: u64, trial: usize) -> Draw {
    let (n, m) = (cfg.n, cfg.m);
    let mut rng = RngStream::new(seed, trial as u64).rng();
    let h = Matrix::from_row_major(n, m, rng.normals(n * m));
    let xp = rng.normals(m);
    let norm = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
    let x = xp.iter().map(|v| v / norm).collect();
    let noise = rng.normals(n);
    let bad_values = rng.normals(n);
    let order = rng.subset(n, n);
    Draw { h, x, noise, bad_values, order }
}

fn run(cfg: &Exp1Config, sweep: &Sweep, seed: u64, name: &str) -> Result<Vec<TrialRecord>, ConfigError> {
    cfg.validate()?;
    check_points(sweep)?;
    let per_trial: Vec<Vec<TrialRecord>> = (0..cfg.runs)
        .into_par_iter()
        .map(|trial| {
            let d = draw(cfg, seed, trial);
            let mut rows = Vec::new();
            for (point, &v) in sweep.values().iter().enumerate() {
                let (sigma, bad) = match sweep {
                    Sweep::Sigma(_) => (v, cfg.bad),
                    Sweep::Rho(_) => (cfg.sigma, BadCount::Fraction(v)),
                };
                let k = match bad {
                    BadCount::Count(k) => k,
                    BadCount::Fraction(r) => (r * cfg.n as f64).round() as usize,
                };
                let y = observations(cfg, &d, sigma, k);
                let rho = k as f64 / cfg.n as f64;
                for &lambda in &cfg.lambda_grid {
                    let (error, converged, iterations) = decode(cfg, &d, &y, lambda);
                    rows.push(TrialRecord {
                        experiment: name.into(),
                        seed,
                        trial,
                        n: cfg.n,
                        m: cfg.m,
                        sigma,
                        rho,
                        lambda,
                        error,
                        converged,
                        iterations,
                        point,
                    });
                }
            }
            rows
        })
        .collect();
    let mut records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.point, r.trial));
    Ok(records)
}

fn observations(cfg: &Exp1Config, d: &Draw, sigma: f64, k: usize) -> Vec<f64> {
    let mut y = d.h.mul_vec(&d.x);
    for &i in &d.order[..k] {
        y[i] = match cfg.error_model {
            ErrorModel::SignFlip => -y[i],
            ErrorModel::Gaussian { std } => y[i] + std * d.bad_values[i],
        };
    }
    for (yi, vi) in y.iter_mut().zip(&d.noise) {
        *yi += sigma * vi;
    }
    y
}

fn decode(cfg: &Exp1Config, d: &Draw, y: &[f64], lambda: f64) -> (f64, bool, usize) {
    let problem = match DecodeProblem::new(y.to_vec(), d.h.clone(), Mode::Lagrangian { lambda }) {
        Ok(p) => p,
        Err(_) => return (f64::NAN, false, 0),
    };
    match solve(&problem, cfg.tol, cfg.max_iter) {
        Ok(s) => (norm_diff(&s.x_hat, &d.x), s.converged, s.iterations),
        Err(_) => (f64::NAN, false, 0),
    }
}
