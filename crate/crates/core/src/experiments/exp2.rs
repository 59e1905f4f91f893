//! Nonlinear estimation on a power network.
//!
//! The true state of each trial is the flat start perturbed uniformly:
//! magnitudes in `1 ± MAGNITUDE_SPREAD`, non-reference angles in
//! `±ANGLE_SPREAD` rad.

use rayon::prelude::*;

use crate::estimator::{estimate, EstimatorConfig};
use crate::powerflow::{evaluate_h, synthetic_case, Measurement, MeasurementPlan, PowerNetwork, StateVector};

use super::record::{summarize_best_lambda, summarize_per_run, ExperimentOutput, TrialRecord};
use super::rng::RngStream;
use super::{check_lambdas, check_points, grid, norm_diff, ConfigError, Sweep};

pub const MAGNITUDE_SPREAD: f64 = 0.05;
pub const ANGLE_SPREAD: f64 = 0.2;

/// Which measurements are corrupted.
#[derive(Debug, Clone, PartialEq)]
pub enum BadSpec {
    /// These measurements have their sign inverted.
    FixedList(Vec<Measurement>),
    /// `round(ρ·n)` random measurements get an extra `N(0, std²)` error.
    Random { rho: f64, std: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp2Config {
    pub net: PowerNetwork<f64>,
    pub plan: MeasurementPlan,
    /// Noise standard deviation, where the sweep does not set it.
    pub sigma: f64,
    pub bad: BadSpec,
    pub lambda_grid: Vec<f64>,
    pub runs: usize,
    /// Tolerances and caps of the estimator; `lambda` is taken from the grid.
    pub estimator: EstimatorConfig<f64>,
}

impl Exp2Config {
    /// No noise, no bad data, `λ ∈ {0.5, 1, …, 12}`, 50 runs. The estimator
    /// stops after 30 outer and 20 000 inner iterations; undamped iterations
    /// that have not settled by then rarely do.
    pub fn new(net: PowerNetwork<f64>, plan: MeasurementPlan) -> Self {
        Self {
            net,
            plan,
            sigma: 0.0,
            bad: BadSpec::FixedList(Vec::new()),
            lambda_grid: grid(0.5, 12.0, 0.5),
            runs: 50,
            estimator: EstimatorConfig { max_outer_iter: 30, max_inner_iter: 100_000, ..EstimatorConfig::new(0.0) },
        }
    }

    /// `synthetic_case(buses, case_seed)` with real injections at buses 2, 3, 5
    /// and the two highest ids, and the reactive injection at the highest id,
    /// sign-flipped. Otherwise as [`Exp2Config::new`].
    pub fn synthetic(buses: usize, case_seed: u64) -> Self {
        assert!(buses >= 6, "the default corruption list needs at least 6 buses");
        let (net, plan) = synthetic_case(buses, case_seed);
        let last = buses - 1;
        let bad = [1, 2, 4, last - 1, last]
            .into_iter()
            .map(Measurement::PInjection)
            .chain([Measurement::QInjection(last)])
            .collect();
        Self { bad: BadSpec::FixedList(bad), ..Self::new(net, plan) }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |s: String| Err(ConfigError::Invalid(s));
        match &self.bad {
            BadSpec::FixedList(list) => {
                if let Some(e) = list.iter().find(|e| self.plan.position(**e).is_none()) {
                    return bad(format!("corrupted measurement {e:?} is not in the plan"));
                }
            }
            BadSpec::Random { rho, std } => {
                if !(0.0..=1.0).contains(rho) || !(std.is_finite() && *std >= 0.0) {
                    return bad(format!("random bad data needs rho in [0, 1] and std >= 0, got {rho}, {std}"));
                }
            }
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return bad(format!("sigma must be finite and >= 0, got {}", self.sigma));
        }
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        check_lambdas(&self.lambda_grid)?;
        let est = &self.estimator;
        if !(est.inner_tol > 0.0 && est.outer_tol > 0.0 && est.max_outer_iter > 0 && est.max_inner_iter > 0) {
            return bad("estimator tolerances and caps must be positive".into());
        }
        Ok(())
    }
}

/// Runs the estimator over the λ grid at every sweep point. A `σ` sweep
/// summarizes per-run `λ*` averaged over runs; a `ρ` sweep (which needs
/// [`BadSpec::Random`]) names the λ with the smallest mean error.
pub fn run_exp2(cfg: &Exp2Config, sweep: &Sweep, seed: u64) -> Result<ExperimentOutput, ConfigError> {
    cfg.validate()?;
    check_points(sweep)?;
    if matches!(sweep, Sweep::Rho(_)) && !matches!(cfg.bad, BadSpec::Random { .. }) {
        return Err(ConfigError::Invalid("a rho sweep needs random bad data".into()));
    }
    let n = cfg.plan.len();
    let m = cfg.net.state_dim();
    let per_trial: Vec<Vec<TrialRecord>> = (0..cfg.runs)
        .into_par_iter()
        .map(|trial| {
            let d = draw(cfg, seed, trial);
            let clean = evaluate_h(&cfg.net, &cfg.plan, &d.truth);
            let mut rows = Vec::new();
            for (point, &v) in sweep.values().iter().enumerate() {
                let sigma = if matches!(sweep, Sweep::Sigma(_)) { v } else { cfg.sigma };
                let mut y = clean.clone();
                let k = corrupt(cfg, sweep, v, &d, &mut y);
                for (yi, vi) in y.iter_mut().zip(&d.noise) {
                    *yi += sigma * vi;
                }
                for &lambda in &cfg.lambda_grid {
                    let est = EstimatorConfig { lambda, ..cfg.estimator };
                    let (error, converged, iterations) = match estimate(&cfg.net, &cfg.plan, &y, &est) {
                        Ok(r) => (norm_diff(&r.x_hat.to_vec(), &d.truth.to_vec()), r.converged, r.outer_iterations),
                        Err(_) => (f64::NAN, false, 0),
                    };
                    rows.push(TrialRecord {
                        experiment: "exp2".into(),
                        seed,
                        trial,
                        n,
                        m,
                        sigma,
                        rho: k as f64 / n as f64,
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
    let summary = match sweep {
        Sweep::Sigma(v) => summarize_per_run(&records, "sigma", v),
        Sweep::Rho(v) => summarize_best_lambda(&records, "rho", v),
    };
    Ok(ExperimentOutput { records, summary })
}

struct Draw {
    truth: StateVector<f64>,
    noise: Vec<f64>,
    bad_values: Vec<f64>,
    order: Vec<usize>,
}

fn draw(cfg: &Exp2Config, seed: u64, trial: usize) -> Draw {
    let mut rng = RngStream::new(seed, trial as u64).rng();
    let mut truth = StateVector::flat_start(&cfg.net);
    for e in truth.magnitudes.iter_mut() {
        *e = rng.uniform_in(1.0 - MAGNITUDE_SPREAD, 1.0 + MAGNITUDE_SPREAD);
    }
    for a in truth.angles.iter_mut() {
        *a = rng.uniform_in(-ANGLE_SPREAD, ANGLE_SPREAD);
    }
    let n = cfg.plan.len();
    let noise = rng.normals(n);
    let bad_values = rng.normals(n);
    let order = rng.subset(n, n);
    Draw { truth, noise, bad_values, order }
}

// applies the bad data for sweep value `v`; returns how many entries were hit
fn corrupt(cfg: &Exp2Config, sweep: &Sweep, v: f64, d: &Draw, y: &mut [f64]) -> usize {
    match &cfg.bad {
        BadSpec::FixedList(list) => {
            for e in list {
                let i = cfg.plan.position(*e).expect("validated");
                y[i] = -y[i];
            }
            list.len()
        }
        BadSpec::Random { rho, std } => {
            let rho = if matches!(sweep, Sweep::Rho(_)) { v } else { *rho };
            let k = (rho * y.len() as f64).round() as usize;
            for &i in &d.order[..k] {
                y[i] += std * d.bad_values[i];
            }
            k
        }
    }
}
