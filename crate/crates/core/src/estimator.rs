//! Nonlinear state estimation by repeated linearization.
//!
//! Starting from the flat start, each outer step solves the lagrangian
//! decoding problem `min ‖Δy − HΔx − z‖₁ + λ‖z‖₂` with `Δy = y − h(x)` and `H`
//! the Jacobian at `x`, then moves to `x + Δx` (no damping). Iteration stops
//! once `‖Δx‖₂ ≤ outer_tol`.
//!
//! `h` is quadratic in the magnitudes, so `(−E, δ)` and `(−E_i, δ_i + π)`
//! measure the same as `(E, δ)`. A step that leaves some magnitude negative is
//! mapped back to the equivalent state with positive magnitudes.

use thiserror::Error;

use crate::decoder::{self, DecodeError, DecodeProblem, Mode, WarmStart};
use crate::powerflow::{evaluate_h, jacobian, MeasurementPlan, PowerNetwork, StateVector};
use crate::scalar::{norm1, norm2, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("invalid estimator configuration: {0}")]
    Config(String),
    #[error("expected {expected} measurements, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig<T> {
    pub lambda: T,
    /// KKT tolerance of the inner solves, scaled by `min(1, last step norm)`.
    pub inner_tol: T,
    /// Stop once `‖Δx‖₂` is at most this.
    pub outer_tol: T,
    pub max_outer_iter: usize,
    /// Iteration cap handed to each inner solve.
    pub max_inner_iter: usize,
}

impl<T: Real> EstimatorConfig<T> {
    pub fn new(lambda: T) -> Self {
        Self {
            lambda,
            inner_tol: T::lit(1e-9),
            outer_tol: T::lit(1e-8),
            max_outer_iter: 50,
            max_inner_iter: 100_000,
        }
    }

    fn validate(&self) -> Result<(), EstimateError> {
        let bad = |m: &str| Err(EstimateError::Config(m.into()));
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return bad("lambda must be finite and >= 0");
        }
        if !(self.inner_tol > T::zero()) || !(self.outer_tol > T::zero()) {
            return bad("tolerances must be > 0");
        }
        if self.max_outer_iter == 0 || self.max_inner_iter == 0 {
            return bad("iteration limits must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult<T> {
    pub x_hat: StateVector<T>,
    pub outer_iterations: usize,
    pub converged: bool,
    /// `‖Δx^k‖₂` for every outer step taken.
    pub per_iteration_step_norms: Vec<T>,
    /// `min_z ‖y − h(x̂) − z‖₁ + λ‖z‖₂`.
    pub final_objective: T,
    /// Primal-dual iterations summed over all inner solves.
    pub inner_iterations: usize,
}

/// Nonlinear objective at `x`, with `z` chosen optimally.
pub fn nonlinear_objective<T: Real>(net: &PowerNetwork<T>, plan: &MeasurementPlan, y: &[T], x: &StateVector<T>, lambda: T) -> T {
    let hx = evaluate_h(net, plan, x);
    let r: Vec<T> = y.iter().zip(&hx).map(|(&a, &b)| a - b).collect();
    let z = decoder::optimal_z(&r, Mode::Lagrangian { lambda });
    let t: Vec<T> = r.iter().zip(&z).map(|(&a, &b)| a - b).collect();
    norm1(&t) + lambda * norm2(&z)
}

/// Runs the outer iteration. Without convergence the iterate with the lowest
/// nonlinear objective is returned with `converged == false`; a Jacobian
/// that loses column rank surfaces as [`DecodeError::RankDeficient`].
pub fn estimate<T: Real>(
    net: &PowerNetwork<T>,
    plan: &MeasurementPlan,
    y: &[T],
    cfg: &EstimatorConfig<T>,
) -> Result<EstimateResult<T>, EstimateError> {
    cfg.validate()?;
    if y.len() != plan.len() {
        return Err(EstimateError::Dimension { expected: plan.len(), got: y.len() });
    }
    let mode = Mode::Lagrangian { lambda: cfg.lambda };
    let mut x = StateVector::flat_start(net);
    let mut steps = Vec::new();
    let mut inner_iterations = 0;
    let mut last_step = T::infinity();
    let mut warm: Option<(Vec<T>, Vec<T>)> = None;
    let mut best = (nonlinear_objective(net, plan, y, &x, cfg.lambda), x.clone());
    let zero_dx = vec![T::zero(); net.state_dim()];

    for _ in 0..cfg.max_outer_iter {
        let hx = evaluate_h(net, plan, &x);
        let dy: Vec<T> = y.iter().zip(&hx).map(|(&a, &b)| a - b).collect();
        let h = jacobian(net, plan, &x);
        let problem = DecodeProblem::new(dy, h, mode)?;
        // tighten with progress, but stay above what the polish step can certify
        let tol = (cfg.inner_tol * last_step.min(T::one())).max(cfg.inner_tol * T::lit(1e-4));
        let start = warm.as_ref().map(|(z, p)| WarmStart { x: &zero_dx, z, dual: p });
        let sol = decoder::solve_from(&problem, tol, cfg.max_inner_iter, start)?;
        inner_iterations += sol.iterations;

        let mut v = x.to_vec();
        for (xi, di) in v.iter_mut().zip(&sol.x_hat) {
            *xi = *xi + *di;
        }
        let step = norm2(&sol.x_hat);
        steps.push(step);
        last_step = step;
        if !step.is_finite() || v.iter().any(|t| !t.is_finite()) {
            break;
        }
        x = StateVector::from_vec(net, &v).expect("dimension preserved");
        positive_magnitudes(&mut x);
        let obj = nonlinear_objective(net, plan, y, &x, cfg.lambda);
        if obj <= best.0 {
            best = (obj, x.clone());
        }
        warm = Some((sol.z_hat, sol.dual));
        if step <= cfg.outer_tol {
            return Ok(EstimateResult {
                final_objective: obj,
                x_hat: x,
                outer_iterations: steps.len(),
                converged: true,
                per_iteration_step_norms: steps,
                inner_iterations,
            });
        }
    }
    Ok(EstimateResult {
        x_hat: best.1,
        outer_iterations: steps.len(),
        converged: false,
        per_iteration_step_norms: steps,
        final_objective: best.0,
        inner_iterations,
    })
}

// Same h(x), all magnitudes ≥ 0, reference angle still 0.
fn positive_magnitudes<T: Real>(x: &mut StateVector<T>) {
    if x.magnitudes[x.reference_bus] < T::zero() {
        x.magnitudes.iter_mut().for_each(|e| *e = -*e);
    }
    let r = x.reference_bus;
    for i in 0..x.magnitudes.len() {
        if x.magnitudes[i] < T::zero() {
            x.magnitudes[i] = -x.magnitudes[i];
            let a = if i < r { i } else { i - 1 };
            x.angles[a] = wrap_angle(x.angles[a] + T::PI());
        }
    }
}

// into (−π, π]
fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut w = a - two_pi * (a / two_pi).round();
    if w <= -T::PI() {
        w = w + two_pi;
    }
    w
}
