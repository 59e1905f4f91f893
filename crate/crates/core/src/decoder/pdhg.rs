//! First-order primal-dual iterations (Chambolle–Pock).
//!
//! The program is written as `min_u F(Ku − b) + G(u)` with `u = (x, z)`,
//! `Ku = −Hx − z`, `b = −y`, `F = ‖·‖₁` and `G(x, z) = g(z)` where `g` is
//! `λ‖·‖₂` or the indicator of the `ε`-ball. The dual step is a clip to
//! `[−1, 1]`, the `z` step is block shrinkage or ball projection, the `x` step
//! is a plain gradient move. The `x` and `z` blocks get separate primal steps
//! with `σ·(τ_x·σ_max(H)² + τ_z) < 1`, which bounds the preconditioned
//! `‖K‖ ≤ √(σ_max(H)² + 1)` below one.
//!
//! Every few iterations the iterate is handed to [`super::polish`]; the run
//! stops as soon as a candidate passes the KKT check at the requested tolerance.
//! When `z = 0` can be optimal, the first polish also tries an exact vertex of
//! the ℓ1 fit.

use crate::scalar::{dot, norm1, norm2, Real};

use super::certificate::kkt_certificate;
use super::polish;
use super::{DecodeProblem, DecodeSolution, Mode, WarmStart};

const CHECK_EVERY: usize = 10;
const FORCED_POLISH_EVERY: usize = 100;
const PRIMAL_WEIGHT: f64 = 0.4;
const X_SHARE: f64 = 0.8;
// adaptive restart thresholds on the KKT error of the restart candidate
const RESTART_SUFFICIENT: f64 = 0.2;
const RESTART_NECESSARY: f64 = 0.8;
const RESTART_ARTIFICIAL: f64 = 0.36;

struct Steps<T> {
    sigma: T,
    tau: T,
    tau_z: T,
}

// σ·(τ_x·σ_max² + τ_z) = 0.99, split between the x and z blocks
fn steps<T: Real>(problem: &DecodeProblem<T>, omega: T) -> Steps<T> {
    let smax2 = problem.sigma_max() * problem.sigma_max();
    let sigma = T::one() / (omega * (smax2 + T::one()).sqrt());
    Steps {
        sigma,
        tau: T::lit(0.99 * X_SHARE) / (sigma * smax2),
        tau_z: T::lit(0.99 * (1.0 - X_SHARE)) / sigma,
    }
}

pub(super) fn run<T: Real>(
    problem: &DecodeProblem<T>,
    tol: T,
    max_iter: usize,
    start: Option<WarmStart<'_, T>>,
) -> DecodeSolution<T> {
    let (n, m) = (problem.n(), problem.m());
    let h = problem.h();
    let y = problem.y();
    let mode = problem.mode();

    // primal weight: ratio of the primal scale ‖y‖/σ_max to the dual scale √n
    let mut omega = T::lit(PRIMAL_WEIGHT) * norm2(y).max(T::min_positive_value().sqrt())
        / (problem.sigma_max() * T::from_usize(n).unwrap().sqrt());
    let mut st = steps(problem, omega);

    let (mut x, mut z, mut p) = match start {
        Some(ws) => (ws.x.to_vec(), ws.z.to_vec(), ws.dual.to_vec()),
        None => (vec![T::zero(); m], vec![T::zero(); n], vec![T::zero(); n]),
    };
    let mut x_bar = x.clone();
    let mut z_bar = z.clone();
    let mut hx = vec![T::zero(); n];
    let mut htp = vec![T::zero(); m];
    let mut z_old = z.clone();
    let (mut x_prev, mut z_prev, mut p_prev) = (x.clone(), z.clone(), p.clone());

    // running sums since the last restart
    let (mut sx, mut sz, mut sp) = (vec![T::zero(); m], vec![T::zero(); n], vec![T::zero(); n]);
    let mut since_restart = 0usize;
    let mut anchor = (x.clone(), z.clone(), p.clone());
    let mut anchor_err = kkt_error(problem, &x, &z, &p);
    let mut last_candidate_err = T::infinity();

    let y_scale = T::one() + norm2(y);
    let p_scale = T::one() + T::from_usize(n).unwrap().sqrt();
    let mut trigger = T::lit(1e-3);
    let mut last_polish = 0usize;
    let mut vertex_pending = polish::vertex_applicable(problem);
    let (mut primal_res, mut dual_res) = (T::infinity(), T::infinity());
    let mut best: Option<DecodeSolution<T>> = None;

    let mut iter = 0usize;
    while iter < max_iter {
        let checking = (iter + 1) % CHECK_EVERY == 0;
        if checking {
            x_prev.copy_from_slice(&x);
            z_prev.copy_from_slice(&z);
            p_prev.copy_from_slice(&p);
        }

        h.mul_vec_into(&x_bar, &mut hx);
        for i in 0..n {
            p[i] = (p[i] + st.sigma * (y[i] - hx[i] - z_bar[i])).max(-T::one()).min(T::one());
        }
        h.tr_mul_vec_into(&p, &mut htp);
        for j in 0..m {
            let xn = x[j] + st.tau * htp[j];
            x_bar[j] = xn + xn - x[j];
            x[j] = xn;
        }
        z_old.copy_from_slice(&z);
        for i in 0..n {
            z[i] = z[i] + st.tau_z * p[i];
        }
        prox_g(mode, st.tau_z, &mut z);
        for i in 0..n {
            z_bar[i] = z[i] + z[i] - z_old[i];
        }
        accumulate(&mut sx, &x);
        accumulate(&mut sz, &z);
        accumulate(&mut sp, &p);
        since_restart += 1;
        iter += 1;

        if !checking {
            continue;
        }
        (primal_res, dual_res) = residuals(problem, &st, (&x_prev, &z_prev, &p_prev), (&x, &z, &p));

        // restart candidate: the average or the current point, whichever is closer to optimal
        let k = T::from_usize(since_restart).unwrap();
        let ax: Vec<T> = sx.iter().map(|&v| v / k).collect();
        let az: Vec<T> = sz.iter().map(|&v| v / k).collect();
        let ap: Vec<T> = sp.iter().map(|&v| v / k).collect();
        let cur_err = kkt_error(problem, &x, &z, &p);
        let avg_err = kkt_error(problem, &ax, &az, &ap);
        let use_avg = avg_err < cur_err;
        let cand_err = if use_avg { avg_err } else { cur_err };
        let restart = cand_err <= T::lit(RESTART_SUFFICIENT) * anchor_err
            || (cand_err <= T::lit(RESTART_NECESSARY) * anchor_err && cand_err > last_candidate_err)
            || T::from_usize(since_restart).unwrap() >= T::lit(RESTART_ARTIFICIAL) * T::from_usize(iter).unwrap();
        last_candidate_err = cand_err;
        if restart {
            if use_avg {
                x = ax;
                z = az;
                p = ap;
            }
            let dx = (dist2(&x, &anchor.0) + dist2(&z, &anchor.1)).sqrt();
            let dp = dist2(&p, &anchor.2).sqrt();
            if dx > T::zero() && dp > T::zero() && (dx / dp).is_finite() {
                // move the primal weight halfway (in log scale) towards the observed ratio
                omega = (omega * dx / dp).sqrt();
                st = steps(problem, omega);
            }
            x_bar.copy_from_slice(&x);
            z_bar.copy_from_slice(&z);
            anchor = (x.clone(), z.clone(), p.clone());
            anchor_err = cand_err;
            last_candidate_err = T::infinity();
            sx.iter_mut().chain(sz.iter_mut()).chain(sp.iter_mut()).for_each(|v| *v = T::zero());
            since_restart = 0;
        }

        let rel = (primal_res / p_scale).max(dual_res / y_scale).min(cand_err);
        if rel <= trigger || iter - last_polish >= FORCED_POLISH_EVERY {
            last_polish = iter;
            if rel <= trigger {
                trigger = (trigger * T::lit(0.3)).max(T::epsilon());
            }
            let mut found = evaluate(problem, &x, &z, &p, iter, primal_res, dual_res);
            if std::mem::take(&mut vertex_pending) {
                if let Some((cand, s)) = polish::vertex(problem, &x) {
                    let sol = evaluate(problem, &cand.x, &cand.z, &s, iter, primal_res, dual_res);
                    if sol.certificate_gap < found.certificate_gap {
                        found = sol;
                    }
                }
            }
            for cand in polish::candidates(problem, &x, &z, &p) {
                let sol = evaluate(problem, &cand.x, &cand.z, &p, iter, primal_res, dual_res);
                if sol.certificate_gap < found.certificate_gap {
                    found = sol;
                }
            }
            if found.certificate_gap <= tol {
                found.converged = true;
                return found;
            }
            keep_best(&mut best, found);
        }
    }

    let last = evaluate(problem, &x, &z, &p, iter, primal_res, dual_res);
    keep_best(&mut best, last);
    let mut sol = best.expect("at least one evaluation");
    sol.iterations = iter;
    sol.converged = sol.certificate_gap <= tol;
    sol
}

fn accumulate<T: Real>(sum: &mut [T], v: &[T]) {
    sum.iter_mut().zip(v).for_each(|(s, &a)| *s = *s + a);
}

fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&u, &v)| acc + (u - v) * (u - v))
}

// Relative KKT error from the duality gap and dual infeasibility. The dual is
// `max yᵀp − g*(p)` over `Hᵀp = 0`, `‖p‖∞ ≤ 1`; for the lagrangian `p` is
// first scaled into the `λ`-ball so that `g*(p) = 0`.
fn kkt_error<T: Real>(problem: &DecodeProblem<T>, x: &[T], z: &[T], p: &[T]) -> T {
    let primal = problem.objective(x, z);
    let pn = norm2(p);
    let (scale, conj) = match problem.mode() {
        Mode::Lagrangian { lambda } => (if pn > lambda { lambda / pn } else { T::one() }, T::zero()),
        Mode::Constrained { epsilon } => (T::one(), epsilon * pn),
    };
    let dual = scale * dot(problem.y(), p) - conj;
    let infeas = scale * norm2(&problem.h().tr_mul_vec(p)) / problem.sigma_max();
    let obj_scale = norm1(problem.y()).max(T::min_positive_value().sqrt());
    let n = T::from_usize(problem.n()).unwrap();
    ((primal - dual) / obj_scale).abs().max(infeas / n.sqrt())
}

fn prox_g<T: Real>(mode: Mode<T>, tau: T, z: &mut [T]) {
    let nz = norm2(z);
    match mode {
        Mode::Lagrangian { lambda } => {
            let shrink = if nz > tau * lambda { T::one() - tau * lambda / nz } else { T::zero() };
            z.iter_mut().for_each(|v| *v = *v * shrink);
        }
        Mode::Constrained { epsilon } => {
            if nz > epsilon {
                let f = if nz > T::zero() { epsilon / nz } else { T::zero() };
                z.iter_mut().for_each(|v| *v = *v * f);
            }
        }
    }
}

type Iterate<'a, T> = (&'a [T], &'a [T], &'a [T]);

// Primal and dual residual norms of one step (old → new).
fn residuals<T: Real>(problem: &DecodeProblem<T>, st: &Steps<T>, old: Iterate<'_, T>, new: Iterate<'_, T>) -> (T, T) {
    let h = problem.h();
    let dx: Vec<T> = old.0.iter().zip(new.0).map(|(&a, &b)| a - b).collect();
    let dz: Vec<T> = old.1.iter().zip(new.1).map(|(&a, &b)| a - b).collect();
    let dp: Vec<T> = old.2.iter().zip(new.2).map(|(&a, &b)| a - b).collect();
    // P = Δu/τ − KᵀΔp with Kᵀq = (−Hᵀq, −q)
    let ht_dp = h.tr_mul_vec(&dp);
    let mut primal = T::zero();
    for (a, b) in dx.iter().zip(&ht_dp) {
        let v = *a / st.tau + *b;
        primal = primal + v * v;
    }
    for (a, b) in dz.iter().zip(&dp) {
        let v = *a / st.tau_z + *b;
        primal = primal + v * v;
    }
    // D = Δp/σ − KΔu with KΔu = −HΔx − Δz
    let h_dx = h.mul_vec(&dx);
    let mut dual = T::zero();
    for i in 0..dp.len() {
        let v = dp[i] / st.sigma + h_dx[i] + dz[i];
        dual = dual + v * v;
    }
    (primal.sqrt(), dual.sqrt())
}

fn evaluate<T: Real>(problem: &DecodeProblem<T>, x: &[T], z: &[T], p: &[T], iter: usize, pr: T, dr: T) -> DecodeSolution<T> {
    let mut sol = DecodeSolution {
        x_hat: x.to_vec(),
        z_hat: z.to_vec(),
        objective: problem.objective(x, z),
        iterations: iter,
        primal_residual: pr,
        dual_residual: dr,
        converged: false,
        certificate_gap: T::infinity(),
        dual: p.to_vec(),
    };
    sol.certificate_gap = kkt_certificate(problem, &sol);
    sol
}

fn keep_best<T: Real>(best: &mut Option<DecodeSolution<T>>, cand: DecodeSolution<T>) {
    let replace = match best {
        Some(b) => cand.certificate_gap < b.certificate_gap,
        None => true,
    };
    if replace {
        *best = Some(cand);
    }
}
