//! Seeded Monte Carlo harnesses for the linear (Gaussian) and power-network
//! experiments.
//!
//! Every trial draws from its own stream `RngStream::new(seed, trial)`, so the
//! records depend only on `(seed, config)`. The same trial index reuses the same
//! draws at every sweep point (common random numbers). Trials run in parallel
//! and rows are assembled in `(sweep point, trial, λ)` order.

pub mod rng;

mod exp1;
mod exp2;
mod record;

pub use exp1::{run_exp1_lambda_sweep, run_exp1_rho_sweep, BadCount, ErrorModel, Exp1Config};
pub use exp2::{run_exp2, BadSpec, Exp2Config, ANGLE_SPREAD, MAGNITUDE_SPREAD};
pub use record::{
    lambda_star, mean_error_table, summary_to_csv, summarize_best_lambda, summarize_per_run, trials_to_csv, ExperimentOutput,
    MeanError, SummaryRow, TrialRecord, SUMMARY_HEADER, TRIAL_HEADER,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid experiment configuration: {0}")]
    Invalid(String),
}

/// What a sweep varies.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Noise standard deviations.
    Sigma(Vec<f64>),
    /// Fractions of measurements carrying bad data.
    Rho(Vec<f64>),
}

impl Sweep {
    pub fn var(&self) -> &'static str {
        match self {
            Sweep::Sigma(_) => "sigma",
            Sweep::Rho(_) => "rho",
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Sweep::Sigma(v) | Sweep::Rho(v) => v,
        }
    }
}

/// `lo, lo + step, …` up to `hi` (inclusive within 1e-12).
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && hi >= lo, "grid needs step > 0 and hi >= lo");
    let count = ((hi - lo) / step + 1e-12).floor() as usize;
    (0..=count).map(|i| lo + step * i as f64).collect()
}

fn check_lambdas(grid: &[f64]) -> Result<(), ConfigError> {
    if grid.is_empty() || grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(ConfigError::Invalid("lambda grid must be nonempty with finite entries >= 0".into()));
    }
    Ok(())
}

fn check_points(sweep: &Sweep) -> Result<(), ConfigError> {
    let v = sweep.values();
    let ok = match sweep {
        Sweep::Sigma(_) => v.iter().all(|s| s.is_finite() && *s >= 0.0),
        Sweep::Rho(_) => v.iter().all(|r| (0.0..=1.0).contains(r)),
    };
    if v.is_empty() || !ok {
        return Err(ConfigError::Invalid(format!("bad {} sweep values {v:?}", sweep.var())));
    }
    Ok(())
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}
