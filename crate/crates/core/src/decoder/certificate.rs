use crate::linalg::HouseholderQr;
use crate::scalar::{norm2, norm_inf, Real};

use super::{DecodeProblem, DecodeSolution, Mode, RANK_TOL};

/// Entries of `t = y − Hx̂ − ẑ` below this, relative to `max(‖y‖∞, ‖Hx̂‖∞)`,
/// count as zero. Relative so that the check does not depend on the units of `y`.
const ZERO_TOL: f64 = 1e-9;

/// Largest violation of the optimality conditions at `(x̂, ẑ)`.
///
/// A subgradient `s ∈ ∂‖t‖₁` is built at `t = y − Hx̂ − ẑ` and checked for
/// `Hᵀs = 0` together with the `z`-condition of the mode:
///
/// * lagrangian: `s = λẑ/‖ẑ‖₂` when `ẑ ≠ 0`, otherwise `‖s‖₂ ≤ λ`;
/// * constrained: `s = μẑ` with `μ ≥ 0` on the ball boundary, `s = 0` strictly
///   inside it, and `‖ẑ‖₂ ≤ ε`.
///
/// The stationarity residual `‖Hᵀs‖∞` is divided by `max(1, max|H_ij|)`.
/// Where `z` does not pin `s` down, entries on the zero set of `t` are free in
/// `[−1, 1]`; they are taken from the solution's dual hint and then corrected
/// by the minimum-norm change that makes `Hᵀs = 0`. Returns `+∞` on
/// dimension mismatch.
pub fn kkt_certificate<T: Real>(problem: &DecodeProblem<T>, solution: &DecodeSolution<T>) -> T {
    let (n, m) = (problem.n(), problem.m());
    if solution.x_hat.len() != m || solution.z_hat.len() != n {
        return T::infinity();
    }
    let t = problem.residual(&solution.x_hat, &solution.z_hat);
    let scale = norm_inf(problem.y()).max(norm_inf(&problem.h().mul_vec(&solution.x_hat)));
    let zero_tol = T::lit(ZERO_TOL) * scale;
    let z = &solution.z_hat;
    let z_norm = norm2(z);
    let hint: Vec<T> = if solution.dual.len() == n { solution.dual.clone() } else { vec![T::zero(); n] };

    let mut extra = T::zero();
    let s = match problem.mode() {
        Mode::Lagrangian { lambda } => {
            if z_norm > zero_tol {
                z.iter().map(|&zi| lambda * zi / z_norm).collect()
            } else {
                let s = free_subgradient(problem, &t, &hint, zero_tol);
                extra = (norm2(&s) - lambda).max(T::zero());
                s
            }
        }
        Mode::Constrained { epsilon } => {
            extra = (z_norm - epsilon).max(T::zero());
            if z_norm <= zero_tol && epsilon <= zero_tol {
                // z pinned at 0: the normal cone is everything
                free_subgradient(problem, &t, &hint, zero_tol)
            } else if z_norm >= epsilon - zero_tol && z_norm > zero_tol {
                let (mut num, mut den) = (T::zero(), T::zero());
                for (&ti, &zi) in t.iter().zip(z) {
                    if ti.abs() > zero_tol {
                        num = num + ti.signum() * zi;
                        den = den + zi * zi;
                    }
                }
                let mu = if den > T::zero() { (num / den).max(T::zero()) } else { T::zero() };
                z.iter().map(|&zi| mu * zi).collect()
            } else {
                vec![T::zero(); n]
            }
        }
    };

    let mut worst = extra;
    for (&si, &ti) in s.iter().zip(&t) {
        worst = worst.max(si.abs() - T::one());
        if ti.abs() > zero_tol {
            worst = worst.max((si - ti.signum()).abs());
        }
    }
    let h_scale = problem.h().max_abs().max(T::one());
    worst.max(norm_inf(&problem.h().tr_mul_vec(&s)) / h_scale)
}

// s_i = sign(t_i) off the zero set; on it, the hint clipped to [-1, 1] and
// shifted by the least-norm correction removing Hᵀs.
fn free_subgradient<T: Real>(problem: &DecodeProblem<T>, t: &[T], hint: &[T], zero_tol: T) -> Vec<T> {
    let one = T::one();
    let free: Vec<usize> = (0..t.len()).filter(|&i| t[i].abs() <= zero_tol).collect();
    let mut s: Vec<T> = t
        .iter()
        .zip(hint)
        .map(|(&ti, &hi)| if ti.abs() > zero_tol { ti.signum() } else { hi.max(-one).min(one) })
        .collect();
    if free.is_empty() {
        return s;
    }
    let h = problem.h();
    let g = h.tr_mul_vec(&s);
    let hf = h.select_rows(&free);
    let rank_tol = T::lit(RANK_TOL);
    let delta: Option<Vec<T>> = if free.len() >= problem.m() {
        // s_F ← s_F − H_F w with (H_FᵀH_F) w = Hᵀs
        HouseholderQr::new(&hf).solve_normal(&g, rank_tol).map(|w| hf.mul_vec(&w))
    } else {
        // fewer free entries than equations: best least-squares fit
        hf.transpose().least_squares(&g, rank_tol)
    };
    if let Some(delta) = delta {
        for (k, &i) in free.iter().enumerate() {
            s[i] = s[i] - delta[k];
        }
    }
    s
}
