//! Exact refinement from an approximate primal iterate.
//!
//! At an optimum with `z ≠ 0`, `z` is the residual `r = y − Hx` clipped to
//! `[−c, c]` and `Hᵀz = 0`. Splitting the measurements into the clipped set `D`
//! (signs `σ_D`) and the exactly fitted set `E` turns the optimality system into
//! `H_EᵀH_E x = H_Eᵀy_E + c·H_Dᵀσ_D`, linear in `(x, c)`, plus one scalar
//! equation (`‖z‖₂ = λc` or `‖z‖₂ = ε`) which is quadratic in `c`. With `z = 0`
//! the optimum interpolates `m` measurements. Both structures are guessed from
//! the iterate; candidates are only accepted after [`super::kkt_certificate`].

use crate::linalg::HouseholderQr;
use crate::scalar::{dot, norm2, norm_inf, Real};

use super::{DecodeProblem, Mode, RANK_TOL};

pub(super) struct Candidate<T> {
    pub x: Vec<T>,
    pub z: Vec<T>,
}

pub(super) fn candidates<T: Real>(problem: &DecodeProblem<T>, x: &[T], z: &[T], dual: &[T]) -> Vec<Candidate<T>> {
    let r = problem.residual(x, &vec![T::zero(); problem.n()]);
    let mut out = Vec::new();
    let pin_zero = match problem.mode() {
        Mode::Constrained { epsilon } => epsilon == T::zero(),
        Mode::Lagrangian { .. } => true,
    };
    if pin_zero {
        if let Some(c) = interpolating(problem, &r) {
            out.push(c);
        }
        // the dual settles earlier than x: interior entries mark the fitted rows
        if let Some(c) = interpolating(problem, dual) {
            out.push(c);
        }
    }
    let c_level = norm_inf(z);
    if c_level > T::zero() || matches!(problem.mode(), Mode::Constrained { epsilon } if epsilon > T::zero()) {
        out.extend(clipped(problem, &r, c_level));
    }
    out
}

// z = 0 and the m best-fitting measurements are matched exactly
fn interpolating<T: Real>(problem: &DecodeProblem<T>, r: &[T]) -> Option<Candidate<T>> {
    let m = problem.m();
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| r[a].abs().partial_cmp(&r[b].abs()).unwrap_or(std::cmp::Ordering::Equal));
    let rows: Vec<usize> = order[..m].to_vec();
    let hf = problem.h().select_rows(&rows);
    let yf: Vec<T> = rows.iter().map(|&i| problem.y()[i]).collect();
    let x = hf.least_squares(&yf, T::lit(RANK_TOL))?;
    Some(Candidate { x, z: vec![T::zero(); problem.n()] })
}

fn clipped<T: Real>(problem: &DecodeProblem<T>, r: &[T], c_level: T) -> Vec<Candidate<T>> {
    let (n, m) = (problem.n(), problem.m());
    let fitted: Vec<usize> = (0..n).filter(|&i| r[i].abs() <= c_level).collect();
    if fitted.len() < m {
        return Vec::new();
    }
    let clipped_idx: Vec<usize> = (0..n).filter(|&i| r[i].abs() > c_level).collect();
    let h = problem.h();
    let he = h.select_rows(&fitted);
    let ye: Vec<T> = fitted.iter().map(|&i| problem.y()[i]).collect();
    let qr = HouseholderQr::new(&he);
    let rank_tol = T::lit(RANK_TOL);
    let Some(x0) = qr.solve(&ye, rank_tol) else {
        return Vec::new();
    };
    let mut signs = vec![T::zero(); n];
    for &i in &clipped_idx {
        signs[i] = r[i].signum();
    }
    let g = h.tr_mul_vec(&signs);
    let Some(x1) = qr.solve_normal(&g, rank_tol) else {
        return Vec::new();
    };
    let he_x0 = he.mul_vec(&x0);
    let a: Vec<T> = ye.iter().zip(&he_x0).map(|(&y, &p)| y - p).collect();
    let b = he.mul_vec(&x1);
    let d = T::from_usize(clipped_idx.len()).unwrap();
    let (aa, ab, bb) = (dot(&a, &a), dot(&a, &b), dot(&b, &b));

    // quadratic q2·c² − 2·ab·c + q0 = 0
    let (q2, q0) = match problem.mode() {
        Mode::Lagrangian { lambda } => (bb + d - lambda * lambda, aa),
        Mode::Constrained { epsilon } => (bb + d, aa - epsilon * epsilon),
    };
    let mut levels = Vec::new();
    if clipped_idx.is_empty() {
        // nothing clipped: z is the least-squares residual
        levels.push(T::zero());
    } else if q2.abs() <= T::epsilon() * (bb + d) {
        if ab != T::zero() {
            levels.push(q0 / (ab + ab));
        }
    } else {
        let disc = ab * ab - q2 * q0;
        if disc >= T::zero() {
            let sq = disc.sqrt();
            levels.push((ab + sq) / q2);
            levels.push((ab - sq) / q2);
        }
    }

    let mut out = Vec::new();
    for c in levels.into_iter().filter(|c| *c >= T::zero() && c.is_finite()) {
        let x: Vec<T> = x0.iter().zip(&x1).map(|(&p, &q)| p + c * q).collect();
        let mut z = vec![T::zero(); n];
        for (k, &i) in fitted.iter().enumerate() {
            z[i] = a[k] - c * b[k];
        }
        for &i in &clipped_idx {
            z[i] = signs[i] * c;
        }
        if let Mode::Constrained { epsilon } = problem.mode() {
            // project rounding noise back onto the ball
            let nz = norm2(&z);
            if nz > epsilon && nz > T::zero() {
                let f = epsilon / nz;
                z.iter_mut().for_each(|v| *v = *v * f);
            }
        }
        out.push(Candidate { x, z });
    }
    out
}

/// Whether a `z = 0` optimum is plausible: `ε = 0`, or `λ² ≥ n − m`, since a
/// vertex of the ℓ1 fit has a subgradient with `n − m` unit entries.
pub(super) fn vertex_applicable<T: Real>(problem: &DecodeProblem<T>) -> bool {
    let free = T::from_usize(problem.n() - problem.m()).unwrap();
    match problem.mode() {
        Mode::Constrained { epsilon } => epsilon == T::zero(),
        Mode::Lagrangian { lambda } => lambda * lambda >= free,
    }
}

/// Exact minimizer of `‖y − Hx‖₁` by walking vertices (rows fitted exactly)
/// from the `m` best-fitting rows at `x`. Each step drops the fitted row whose
/// multiplier exceeds one and moves along the edge to the minimum of the
/// piecewise-linear objective. Ties between rows are broken by walking on a
/// copy of `y` perturbed far below the certificate's zero threshold; the final
/// vertex is solved on the true `y`. Returns the vertex with its subgradient,
/// or `None` if the walk stalls.
pub(super) fn vertex<T: Real>(problem: &DecodeProblem<T>, x: &[T]) -> Option<(Candidate<T>, Vec<T>)> {
    let (n, m) = (problem.n(), problem.m());
    let h = problem.h();
    let rank_tol = T::lit(RANK_TOL);
    let scale = norm_inf(problem.y()).max(T::min_positive_value());
    // golden-ratio sequence in [0.5, 1): deterministic and free of repeats
    let y: Vec<T> = problem
        .y()
        .iter()
        .enumerate()
        .map(|(i, &v)| v + T::lit(1e-11) * scale * T::lit(0.5 + 0.5 * ((i + 1) as f64 * 0.618_033_988_749_895).fract()))
        .collect();
    let r0 = problem.residual(x, &vec![T::zero(); n]);
    let mut basis = independent_rows(problem, &r0)?;
    let mut in_basis = vec![false; n];

    for _ in 0..20 * m + 50 {
        in_basis.iter_mut().for_each(|b| *b = false);
        basis.iter().for_each(|&i| in_basis[i] = true);
        let hb = h.select_rows(&basis);
        let qr = HouseholderQr::new(&hb);
        let yb: Vec<T> = basis.iter().map(|&i| y[i]).collect();
        let xv = qr.solve(&yb, rank_tol)?;
        let hx = h.mul_vec(&xv);
        let r: Vec<T> = (0..n).map(|i| if in_basis[i] { T::zero() } else { y[i] - hx[i] }).collect();

        let mut s: Vec<T> = r.iter().map(|v| if *v == T::zero() { T::zero() } else { v.signum() }).collect();
        // H_Bᵀ s_B = −H_Nᵀ s_N
        let g: Vec<T> = h.tr_mul_vec(&s).into_iter().map(|v| -v).collect();
        let sb = hb.mul_vec(&qr.solve_normal(&g, rank_tol)?);
        for (&i, &v) in basis.iter().zip(&sb) {
            s[i] = v;
        }
        let (leave, worst) = sb
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.abs()))
            .fold((0, T::zero()), |a, b| if b.1 > a.1 { b } else { a });
        if worst <= T::one() + T::lit(1e-10) {
            let yt: Vec<T> = basis.iter().map(|&i| problem.y()[i]).collect();
            let x = qr.solve(&yt, rank_tol)?;
            return Some((Candidate { x, z: vec![T::zero(); n] }, s));
        }

        // edge direction: every other basic row stays fitted
        let mut e = vec![T::zero(); m];
        e[leave] = -sb[leave].signum();
        let d = qr.solve(&e, rank_tol)?;
        let hd = h.mul_vec(&d);
        let mut slope = T::one();
        let mut breaks = Vec::new();
        for i in (0..n).filter(|&i| !in_basis[i]) {
            slope = slope - s[i] * hd[i];
            let t = r[i] / hd[i];
            if t >= T::zero() && t.is_finite() {
                breaks.push((t, i, hd[i].abs()));
            }
        }
        breaks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut enter = None;
        for (_, i, w) in breaks {
            slope = slope + w + w;
            if slope >= T::zero() {
                enter = Some(i);
                break;
            }
        }
        basis[leave] = enter?;
    }
    None
}
// m rows in order of increasing |r| whose H rows are linearly independent
fn independent_rows<T: Real>(problem: &DecodeProblem<T>, r: &[T]) -> Option<Vec<usize>> {
    let (n, m) = (problem.n(), problem.m());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| r[a].abs().partial_cmp(&r[b].abs()).unwrap_or(std::cmp::Ordering::Equal));
    let mut q: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut rows = Vec::with_capacity(m);
    for i in order {
        let mut v = problem.h().row(i).to_vec();
        let size = norm2(&v);
        for _ in 0..2 {
            for b in &q {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(a, &bb)| *a = *a - c * bb);
            }
        }
        let rest = norm2(&v);
        if rest > T::lit(1e-8) * size {
            v.iter_mut().for_each(|a| *a = *a / rest);
            q.push(v);
            rows.push(i);
            if rows.len() == m {
                return Some(rows);
            }
        }
    }
    None
}
