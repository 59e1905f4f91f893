//! Brute-force reference computations shared by the integration tests.
#![allow(dead_code)]

use robust_se::decoder::{DecodeProblem, Mode};
use robust_se::linalg::Matrix;

/// Minimizer of a convex function on `[lo, hi]`, golden-section to width `tol`.
pub fn golden(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// `min_z ‖r − z‖₁ + λ‖z‖₂` (or `s.t. ‖z‖₂ ≤ ε`) for a fixed residual `r`.
///
/// Any optimal `z` has `|z_i| ≤ |r_i|` with the sign of `r_i`, and moving mass
/// from a large entry to a small one keeps `‖r − z‖₁` while lowering `‖z‖₂`,
/// so the optimum clips `r` at a common level `c`; only `c` is searched.
pub fn inner_value(r: &[f64], mode: Mode<f64>) -> f64 {
    let top = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let excess = |c: f64| r.iter().map(|v| (v.abs() - c).max(0.0)).sum::<f64>();
    let clipped_norm = |c: f64| r.iter().map(|v| v.abs().min(c).powi(2)).sum::<f64>().sqrt();
    match mode {
        Mode::Lagrangian { lambda } => golden(0.0, top, 1e-13 * (1.0 + top), |c| excess(c) + lambda * clipped_norm(c)).1,
        Mode::Constrained { epsilon } => {
            if clipped_norm(top) <= epsilon {
                return 0.0;
            }
            let (mut lo, mut hi) = (0.0, top);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if clipped_norm(mid) <= epsilon {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            excess(lo)
        }
    }
}

fn residual(h: &Matrix<f64>, y: &[f64], x: &[f64]) -> Vec<f64> {
    let hx = h.mul_vec(x);
    y.iter().zip(&hx).map(|(a, b)| a - b).collect()
}

/// Optimal value for `m ≤ 2` by (nested) golden-section search over `x` in
/// `[−bound, bound]^m`, with the inner problem solved by [`inner_value`].
pub fn tiny_optimum(problem: &DecodeProblem<f64>, bound: f64) -> (Vec<f64>, f64) {
    let (h, y, mode) = (problem.h(), problem.y(), problem.mode());
    let tol = 1e-11;
    match problem.m() {
        1 => {
            let (x, v) = golden(-bound, bound, tol, |a| inner_value(&residual(h, y, &[a]), mode));
            (vec![x], v)
        }
        2 => {
            let best_b = |a: f64| golden(-bound, bound, tol, |b| inner_value(&residual(h, y, &[a, b]), mode));
            let (a, v) = golden(-bound, bound, tol, |a| best_b(a).1);
            (vec![a, best_b(a).0], v)
        }
        m => panic!("tiny oracle supports m <= 2, got {m}"),
    }
}

/// `min_x ‖y − Hx‖₁`: some optimum interpolates `m` of the measurements, so
/// every `m`-subset is tried.
pub fn l1_by_vertices(h: &Matrix<f64>, y: &[f64]) -> f64 {
    let (n, m) = (h.nrows(), h.ncols());
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        let hs = h.select_rows(&idx);
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        if let Some(x) = hs.least_squares(&ys, 1e-12) {
            let v: f64 = residual(h, y, &x).iter().map(|r| r.abs()).sum();
            best = best.min(v);
        }
        // next combination in lexicographic order
        let mut i = m;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < n - m + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for k in i..=j {
                r[order[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}
