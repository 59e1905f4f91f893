//! Complementary error function.
//!
//! For |x| ≤ 3 the all-positive series
//! `erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))` (A&S 7.1.6) is summed
//! to machine precision; it has no cancellation, so `1 − erf` is accurate to a
//! few ulps in absolute terms. For |x| > 3 the Laplace continued fraction
//! (A&S 7.1.14) is evaluated with the modified Lentz method, which gives
//! `erfc` to near machine precision in relative terms. Absolute error over the
//! real line is below 1e-15 in `f64`.

use crate::scalar::Real;

const SERIES_LIMIT: f64 = 3.0;

pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x < T::zero() {
        return T::lit(2.0) - erfc(-x);
    }
    if x <= T::lit(SERIES_LIMIT) {
        T::one() - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

pub fn erf<T: Real>(x: T) -> T {
    T::one() - erfc(x)
}

fn erf_series<T: Real>(x: T) -> T {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0usize;
    loop {
        k += 1;
        term = term * (x2 + x2) / T::from_usize(2 * k + 1).unwrap();
        sum = sum + term;
        if term <= T::epsilon() * sum || k > 200 {
            break;
        }
    }
    T::FRAC_2_SQRT_PI() * (-x2).exp() * sum
}

// erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + 2/(x + …)))))
fn erfc_continued_fraction<T: Real>(x: T) -> T {
    if x > T::lit(27.0) {
        return T::zero();
    }
    let tiny = T::min_positive_value().sqrt();
    let mut f = x;
    let mut c = x;
    let mut d = T::zero();
    for k in 1..500 {
        let a = T::from_usize(k).unwrap() * T::lit(0.5);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = T::one() / d;
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    (-x * x).exp() * T::FRAC_2_SQRT_PI() * T::lit(0.5) / f
}
