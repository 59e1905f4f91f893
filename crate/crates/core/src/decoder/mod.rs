//! Robust linear decoding: recover `x` from `y = Hx + e + v` with sparse `e`
//! and dense bounded noise `v`.
//!
//! Two convex programs are supported:
//!
//! * constrained: `min ‖y − Hx − z‖₁  s.t. ‖z‖₂ ≤ ε`
//! * lagrangian:  `min ‖y − Hx − z‖₁ + λ‖z‖₂`
//!
//! Both are solved by the same primal-dual splitting (see [`pdhg`]) followed
//! by an exact active-set refinement (see [`polish`]); every returned solution
//! carries a KKT violation measure from [`kkt_certificate`].

mod certificate;
pub mod io;
mod pdhg;
mod polish;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::{norm1, norm2, Real};

pub use certificate::kkt_certificate;

/// Relative singular-value threshold below which `H` is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("measurement matrix is rank deficient (sigma_min={sigma_min:e}, sigma_max={sigma_max:e})")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },
    #[error("solver did not converge in {iterations} iterations (kkt violation {certificate:e})")]
    NotConverged { iterations: usize, certificate: f64 },
}

/// Which program to solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode<T> {
    /// `‖z‖₂ ≤ epsilon`
    Constrained { epsilon: T },
    /// `+ lambda·‖z‖₂` penalty
    Lagrangian { lambda: T },
}

impl<T: Real> Mode<T> {
    pub fn param(&self) -> T {
        match *self {
            Mode::Constrained { epsilon } => epsilon,
            Mode::Lagrangian { lambda } => lambda,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Constrained { .. } => "constrained",
            Mode::Lagrangian { .. } => "lagrangian",
        }
    }
}

/// A validated decoding instance.
#[derive(Debug, Clone)]
pub struct DecodeProblem<T> {
    y: Vec<T>,
    h: Matrix<T>,
    mode: Mode<T>,
    sigma_max: T,
    sigma_min: T,
}

impl<T: Real> DecodeProblem<T> {
    /// Checks `n > m ≥ 1`, a nonnegative parameter and full column rank of `h`.
    pub fn new(y: Vec<T>, h: Matrix<T>, mode: Mode<T>) -> Result<Self, DecodeError> {
        let (n, m) = (h.nrows(), h.ncols());
        if m == 0 || n <= m {
            return Err(DecodeError::Dimension(format!("need n > m >= 1, got n={n} m={m}")));
        }
        if y.len() != n {
            return Err(DecodeError::Dimension(format!("y has length {} but H has {n} rows", y.len())));
        }
        let p = mode.param();
        if !(p >= T::zero()) || !p.is_finite() {
            return Err(DecodeError::InvalidParameter(format!("{} parameter must be finite and >= 0, got {p}", mode.name())));
        }
        if y.iter().chain(h.as_slice()).any(|v| !v.is_finite()) {
            return Err(DecodeError::InvalidParameter("non-finite entry in y or H".into()));
        }
        let sv = h.singular_values();
        let (sigma_max, sigma_min) = (sv[0], sv[sv.len() - 1]);
        if !(sigma_min > T::lit(RANK_TOL) * sigma_max) {
            return Err(DecodeError::RankDeficient {
                sigma_min: sigma_min.to_f64_lossy(),
                sigma_max: sigma_max.to_f64_lossy(),
            });
        }
        Ok(Self { y, h, mode, sigma_max, sigma_min })
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn h(&self) -> &Matrix<T> {
        &self.h
    }

    pub fn mode(&self) -> Mode<T> {
        self.mode
    }

    /// Same data, different program.
    pub fn with_mode(&self, mode: Mode<T>) -> Result<Self, DecodeError> {
        let p = mode.param();
        if !(p >= T::zero()) || !p.is_finite() {
            return Err(DecodeError::InvalidParameter(format!("{} parameter must be finite and >= 0, got {p}", mode.name())));
        }
        Ok(Self { mode, ..self.clone() })
    }

    /// Number of measurements.
    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    /// State dimension.
    pub fn m(&self) -> usize {
        self.h.ncols()
    }

    pub fn sigma_max(&self) -> T {
        self.sigma_max
    }

    pub fn sigma_min(&self) -> T {
        self.sigma_min
    }

    /// Residual `t = y − Hx − z`.
    pub fn residual(&self, x: &[T], z: &[T]) -> Vec<T> {
        let hx = self.h.mul_vec(x);
        self.y.iter().zip(&hx).zip(z).map(|((&y, &a), &b)| y - a - b).collect()
    }

    /// Objective value of the selected program (constraint not included).
    pub fn objective(&self, x: &[T], z: &[T]) -> T {
        let t = self.residual(x, z);
        match self.mode {
            Mode::Constrained { .. } => norm1(&t),
            Mode::Lagrangian { lambda } => norm1(&t) + lambda * norm2(z),
        }
    }
}

/// Solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeSolution<T> {
    pub x_hat: Vec<T>,
    pub z_hat: Vec<T>,
    pub objective: T,
    pub iterations: usize,
    pub primal_residual: T,
    pub dual_residual: T,
    pub converged: bool,
    /// Largest KKT violation, see [`kkt_certificate`].
    pub certificate_gap: T,
    /// Dual iterate (a subgradient of `‖·‖₁` at the residual), used as a hint
    /// when building the optimality certificate.
    pub dual: Vec<T>,
}

impl<T: Real> DecodeSolution<T> {
    /// Turns a non-converged solution into [`DecodeError::NotConverged`].
    pub fn ensure_converged(self) -> Result<Self, DecodeError> {
        if self.converged {
            Ok(self)
        } else {
            Err(DecodeError::NotConverged {
                iterations: self.iterations,
                certificate: self.certificate_gap.to_f64_lossy(),
            })
        }
    }
}

/// Starting point for [`solve_from`].
#[derive(Debug, Clone, Copy)]
pub struct WarmStart<'a, T> {
    pub x: &'a [T],
    pub z: &'a [T],
    pub dual: &'a [T],
}

/// Solves the problem to tolerance `tol` (on the KKT violation) within `max_iter`
/// primal-dual iterations. Hitting `max_iter` returns the best iterate found
/// with `converged == false`.
pub fn solve<T: Real>(problem: &DecodeProblem<T>, tol: T, max_iter: usize) -> Result<DecodeSolution<T>, DecodeError> {
    solve_from(problem, tol, max_iter, None)
}

pub fn solve_from<T: Real>(
    problem: &DecodeProblem<T>,
    tol: T,
    max_iter: usize,
    start: Option<WarmStart<'_, T>>,
) -> Result<DecodeSolution<T>, DecodeError> {
    if !(tol > T::zero()) {
        return Err(DecodeError::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    if let Some(ws) = start {
        if ws.x.len() != problem.m() || ws.z.len() != problem.n() || ws.dual.len() != problem.n() {
            return Err(DecodeError::Dimension("warm start has wrong dimensions".into()));
        }
    }
    if let Mode::Lagrangian { lambda } = problem.mode() {
        if lambda == T::zero() {
            return Ok(least_squares_limit(problem, tol));
        }
    }
    Ok(pdhg::run(problem, tol, max_iter, start))
}

// λ = 0 leaves z free, so the minimizers form a set; report its λ → 0⁺ limit,
// the least-squares estimate with z absorbing the whole residual.
fn least_squares_limit<T: Real>(problem: &DecodeProblem<T>, tol: T) -> DecodeSolution<T> {
    let x = problem
        .h()
        .least_squares(problem.y(), T::lit(RANK_TOL))
        .expect("rank checked at construction");
    let z = problem.residual(&x, &vec![T::zero(); problem.n()]);
    let mut sol = DecodeSolution {
        objective: problem.objective(&x, &z),
        x_hat: x,
        z_hat: z,
        iterations: 0,
        primal_residual: T::zero(),
        dual_residual: T::zero(),
        converged: false,
        certificate_gap: T::zero(),
        dual: vec![T::zero(); problem.n()],
    };
    sol.certificate_gap = kkt_certificate(problem, &sol);
    sol.converged = sol.certificate_gap <= tol;
    sol
}

/// The best `z` for a fixed residual `r`: `argmin_z ‖r − z‖₁ + λ‖z‖₂`, or
/// `argmin ‖r − z‖₁` over `‖z‖₂ ≤ ε`. The minimizer clips `r` to `[−c, c]`;
/// `c` is found exactly by walking the sorted magnitudes.
pub fn optimal_z<T: Real>(r: &[T], mode: Mode<T>) -> Vec<T> {
    let n = r.len();
    let mut a: Vec<T> = r.iter().map(|v| v.abs()).collect();
    a.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    // tail[d] = Σ_{i ≥ d} a_i²
    let mut tail = vec![T::zero(); n + 1];
    for i in (0..n).rev() {
        tail[i] = tail[i + 1] + a[i] * a[i];
    }
    let clip = |c: T| r.iter().map(|&v| v.max(-c).min(c)).collect::<Vec<T>>();
    if n == 0 {
        return Vec::new();
    }
    let level = match mode {
        Mode::Lagrangian { lambda } => {
            // with d entries clipped, optimality is λ²c² = tail[d] + d·c²
            if lambda * a[0] <= tail[0].sqrt() {
                return r.to_vec();
            }
            let l2 = lambda * lambda;
            (1..=n).find_map(|d| {
                let dd = T::from_usize(d).unwrap();
                if l2 <= dd {
                    return None;
                }
                let c = (tail[d] / (l2 - dd)).sqrt();
                let lo = if d < n { a[d] } else { T::zero() };
                in_bracket(c, lo, a[d - 1])
            })
        }
        Mode::Constrained { epsilon } => {
            if tail[0] <= epsilon * epsilon {
                return r.to_vec();
            }
            // ‖clip(r, c)‖² = tail[d] + d·c² = ε²
            (1..=n).find_map(|d| {
                let rest = epsilon * epsilon - tail[d];
                if rest < T::zero() {
                    return None;
                }
                let c = (rest / T::from_usize(d).unwrap()).sqrt();
                let lo = if d < n { a[d] } else { T::zero() };
                in_bracket(c, lo, a[d - 1])
            })
        }
    };
    clip(level.unwrap_or(T::zero()))
}

// c ∈ [lo, hi] up to rounding
fn in_bracket<T: Real>(c: T, lo: T, hi: T) -> Option<T> {
    let slack = T::lit(8.0) * T::epsilon();
    (c >= lo * (T::one() - slack) && c <= hi * (T::one() + slack)).then(|| c.max(lo).min(hi))
}

/// Smallest singular value of `h`.
pub fn min_singular_value<T: Real>(h: &Matrix<T>) -> T {
    h.singular_values().last().copied().unwrap_or(T::zero())
}

/// Right-hand side of the worst-case error bound
/// `‖x − x̂‖₂ ≤ 2(C+1)/(σ_min·α·(C−1))·ε`.
pub fn theorem1_bound<T: Real>(sigma_min: T, alpha: T, c: T, epsilon: T) -> T {
    debug_assert!(c > T::one() && sigma_min > T::zero() && alpha > T::zero());
    T::lit(2.0) * (c + T::one()) / (sigma_min * alpha * (c - T::one())) * epsilon
}

/// A sparse gross-error pattern: `values[i]` is added at `support[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseErrorSpec<T> {
    support: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SparseErrorSpec<T> {
    pub fn new(n: usize, support: Vec<usize>, values: Vec<T>) -> Result<Self, DecodeError> {
        if support.len() != values.len() {
            return Err(DecodeError::Dimension("support and values differ in length".into()));
        }
        if support.len() >= n {
            return Err(DecodeError::InvalidParameter(format!("need k < n, got k={} n={n}", support.len())));
        }
        let mut seen = vec![false; n];
        for &i in &support {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(DecodeError::InvalidParameter(format!("support index {i} out of range or repeated")));
            }
        }
        Ok(Self { support, values })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn to_dense(&self, n: usize) -> Vec<T> {
        let mut e = vec![T::zero(); n];
        self.add_to(&mut e);
        e
    }

    pub fn add_to(&self, y: &mut [T]) {
        for (&i, &v) in self.support.iter().zip(&self.values) {
            y[i] = y[i] + v;
        }
    }
}

#[cfg(test)]
mod tests;
