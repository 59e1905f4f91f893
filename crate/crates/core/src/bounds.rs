//! Recovery bounds for Gaussian measurement matrices.
//!
//! All quantities are normalized by `√n`: `g(α)` bounds the Gaussian width of
//! the set of unit vectors violating the almost-Euclidean inequality
//! `α√n‖w‖₂ ≤ ‖w‖₁`, `α*(δ)` is the largest constant the escape-through-mesh
//! argument certifies for a random subspace with `δ = m/n`, and `ϖ(δ, ρ)` is the
//! resulting error-amplification factor, i.e. `‖x − x̂‖₂ ≤ ϖ·ε/√n`.

use thiserror::Error;

use crate::scalar::Real;
use crate::special::erfc;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BoundsError {
    #[error("delta must lie in (0, 1), got {0}")]
    Delta(f64),
    #[error("rho must lie in (0, 1), got {0}")]
    Rho(f64),
}

/// The ratio `δ = m/n` of state dimension to measurement count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceRatio<T>(T);

impl<T: Real> SubspaceRatio<T> {
    pub fn new(delta: T) -> Result<Self, BoundsError> {
        if delta > T::zero() && delta < T::one() {
            Ok(Self(delta))
        } else {
            Err(BoundsError::Delta(delta.to_f64_lossy()))
        }
    }

    /// `m` state variables observed through `n` measurements.
    pub fn from_dims(m: usize, n: usize) -> Result<Self, BoundsError> {
        Self::new(T::from_usize(m).unwrap() / T::from_usize(n).unwrap())
    }

    pub fn delta(self) -> T {
        self.0
    }
}

/// Inner objective, evaluated at `u2`:
/// `sqrt((u²+1)·erfc(u/√2) − √(2/π)·u·e^{−u²/2}) + α·u`.
pub fn g_objective<T: Real>(alpha: T, u2: T) -> T {
    let half = T::lit(0.5);
    let radicand = (u2 * u2 + T::one()) * erfc(u2 * T::FRAC_1_SQRT_2())
        - (T::FRAC_2_PI()).sqrt() * u2 * (-half * u2 * u2).exp();
    // analytically nonnegative; cancellation drives it slightly below 0 for large u2
    radicand.max(T::zero()).sqrt() + alpha * u2
}

const U2_MAX: f64 = 10.0;

/// `g(α) = min_{u2 ≥ 0} g_objective(α, u2)` by golden-section search on [0, 10].
pub fn g_of_alpha<T: Real>(alpha: T) -> T {
    let (u, val) = golden_section_min(|u| g_objective(alpha, u), T::zero(), T::lit(U2_MAX), T::lit(1e-12));
    debug_assert!(u >= T::zero());
    // convex with possible boundary minimum at u2 = 0 where the value is exactly 1
    val.min(T::one())
}

/// Largest `α` with `g(α) < √(1 − δ)`, by bisection on `[0, √(2/π)]`.
pub fn alpha_star<T: Real>(delta: T) -> T {
    debug_assert!(delta > T::zero() && delta < T::one());
    let target = (T::one() - delta).sqrt();
    let mut lo = T::zero();
    let mut hi = T::FRAC_2_PI().sqrt();
    for _ in 0..60 {
        let mid = T::lit(0.5) * (lo + hi);
        if g_of_alpha(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Balancedness constant for sparsity `ρ = k/n` under almost-Euclidean constant `α`.
///
/// Every ratio `‖w_K̄‖₁/‖w_K‖₁ = C` attainable by an almost-Euclidean vector obeys
/// `1/ρ + C²/(1−ρ) ≤ (C+1)²/α²`. The smallest ratio that can be attained is the
/// root of the equality where the quadratic first turns nonpositive coming from
/// `C = 0`: the larger root when the leading coefficient is negative (the usual
/// small-`ρ` case) and the smaller one when it is positive. Returns `None` when
/// that root does not exceed 1, i.e. `ρ` is beyond the recoverable range.
pub fn c_from_sparsity<T: Real>(alpha: T, rho: T) -> Option<T> {
    if !(alpha > T::zero() && rho > T::zero() && rho < T::one()) {
        return None;
    }
    let inv_a2 = (alpha * alpha).recip();
    let a = (T::one() - rho).recip() - inv_a2;
    let b = -(inv_a2 + inv_a2);
    let c0 = rho.recip() - inv_a2;
    if c0 <= T::zero() {
        // C = 0 is attainable
        return None;
    }
    let scale = rho.recip().max(inv_a2);
    let root = if a.abs() <= T::lit(1e-14) * scale {
        -c0 / b
    } else {
        let disc = b * b - T::lit(4.0) * a * c0;
        if disc < T::zero() {
            return None;
        }
        // b < 0, so q > 0 and both roots are formed without cancellation
        let q = -T::lit(0.5) * (b - disc.sqrt());
        let (r1, r2) = (q / a, c0 / q);
        if a < T::zero() {
            r1.max(r2)
        } else {
            r1.min(r2)
        }
    };
    (root > T::one() && root.is_finite()).then_some(root)
}

/// Sparsity at which [`c_from_sparsity`] reaches `C = 1`: the smaller root of
/// `1/ρ + 1/(1−ρ) = 4/α²`, i.e. `ρ(1−ρ) = α²/4`.
pub fn max_recoverable_sparsity<T: Real>(alpha: T) -> T {
    let a2 = alpha * alpha;
    let disc = (T::one() - a2).max(T::zero()).sqrt();
    a2 / (T::lit(2.0) * (T::one() + disc))
}

/// Limit of `σ_min/√n` for an `n×m` standard Gaussian matrix.
pub fn sigma_min_normalized<T: Real>(delta: T) -> T {
    T::one() - delta.sqrt()
}

/// `ϖ = 2(C+1) / ((1−√δ)·α*·(C−1))`, `None` when `ρ` is not recoverable.
pub fn varpi<T: Real>(delta: T, rho: T) -> Option<T> {
    let alpha = alpha_star(delta);
    let c = c_from_sparsity(alpha, rho)?;
    Some(amplification(sigma_min_normalized(delta), alpha, c))
}

fn amplification<T: Real>(sigma: T, alpha: T, c: T) -> T {
    T::lit(2.0) * (c + T::one()) / (sigma * alpha * (c - T::one()))
}

/// Escape-through-mesh lower bound `1 − 3.5·exp(−((√(n−m) − 1/(2√(n−m))) − w)/18)`.
///
/// Implemented with the linear deviation in the exponent; the classical form
/// squares it. The value may be negative (vacuous).
pub fn escape_probability_lower_bound<T: Real>(n: usize, m: usize, width: T) -> T {
    assert!(n > m, "escape bound needs n > m");
    let r = T::from_usize(n - m).unwrap().sqrt();
    let threshold = r - T::one() / (r + r);
    T::one() - T::lit(3.5) * (-(threshold - width) / T::lit(18.0)).exp()
}

/// Summary of all bound quantities at one `(δ, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport<T> {
    pub delta: T,
    pub rho: T,
    pub alpha_star: T,
    /// Balancedness constant; NaN when infeasible.
    pub c_constant: T,
    pub sigma_min_normalized: T,
    /// Amplification factor; NaN when infeasible.
    pub varpi: T,
    pub feasible: bool,
}

impl<T: Real> BoundReport<T> {
    pub fn compute(delta: T, rho: T) -> Result<Self, BoundsError> {
        let ratio = SubspaceRatio::new(delta)?;
        if !(rho > T::zero() && rho < T::one()) {
            return Err(BoundsError::Rho(rho.to_f64_lossy()));
        }
        let alpha = alpha_star(ratio.delta());
        let sigma = sigma_min_normalized(delta);
        let (c, varpi, feasible) = match c_from_sparsity(alpha, rho) {
            Some(c) => (c, amplification(sigma, alpha, c), true),
            None => (T::nan(), T::nan(), false),
        };
        Ok(Self {
            delta,
            rho,
            alpha_star: alpha,
            c_constant: c,
            sigma_min_normalized: sigma,
            varpi,
            feasible,
        })
    }

    /// Single-line `key=value` rendering.
    pub fn to_line(&self) -> String {
        format!(
            "delta={} rho={} alpha_star={:.6} c={:.6} sigma_min_normalized={:.6} varpi={:.6} feasible={}",
            self.delta,
            self.rho,
            self.alpha_star,
            self.c_constant,
            self.sigma_min_normalized,
            self.varpi,
            self.feasible
        )
    }
}

/// Minimizes a unimodal function on `[a, b]`; returns `(argmin, min)`.
pub(crate) fn golden_section_min<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, tol: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = T::lit(0.5) * (a + b);
    let fx = f(x);
    let (mut best_x, mut best) = (x, fx);
    for (xx, fv) in [(a, f(a)), (b, f(b))] {
        if fv < best {
            best = fv;
            best_x = xx;
        }
    }
    (best_x, best)
}
