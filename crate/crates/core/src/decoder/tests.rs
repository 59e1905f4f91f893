use super::*;
use crate::experiments::rng::RngStream;

fn gaussian_instance(seed: u64, n: usize, m: usize, k: usize, sigma: f64) -> (Matrix<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = RngStream::new(seed, 0).rng();
    let h = Matrix::from_row_major(n, m, rng.normals(n * m));
    let x = rng.normals(m);
    let mut y = h.mul_vec(&x);
    for i in rng.subset(n, k) {
        y[i] = -y[i];
    }
    for v in y.iter_mut() {
        *v += sigma * rng.normal();
    }
    (h, x, y)
}

fn ones(n: usize) -> Matrix<f64> {
    Matrix::from_fn(n, 1, |_, _| 1.0)
}

#[test]
fn three_measurements_of_a_scalar() {
    let p = DecodeProblem::new(vec![5.0, 5.0, 15.0], ones(3), Mode::Lagrangian { lambda: 10.0 }).unwrap();
    let s = solve(&p, 1e-10, 100_000).unwrap();
    assert!(s.converged);
    assert!((s.x_hat[0] - 5.0).abs() < 1e-9);
    let t = p.residual(&s.x_hat, &s.z_hat);
    assert!(t[0].abs() < 1e-9 && t[1].abs() < 1e-9 && (t[2] - 10.0).abs() < 1e-9);
    assert!((s.objective - 10.0).abs() < 1e-9);
}

#[test]
fn exact_measurements_are_reproduced() {
    let (h, x, _) = gaussian_instance(11, 30, 6, 0, 0.0);
    let y = h.mul_vec(&x);
    for mode in [Mode::Lagrangian { lambda: 2.0 }, Mode::Constrained { epsilon: 0.5 }, Mode::Constrained { epsilon: 0.0 }] {
        let p = DecodeProblem::new(y.clone(), h.clone(), mode).unwrap();
        let s = solve(&p, 1e-9, 100_000).unwrap();
        assert!(s.converged, "{mode:?}");
        assert!(s.objective.abs() < 1e-9);
        if !matches!(mode, Mode::Constrained { epsilon } if epsilon > 0.0) {
            // inside the ε-ball any x with ‖y − Hx‖ ≤ ε is optimal
            assert!(s.x_hat.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-8));
            assert!(s.z_hat.iter().all(|v| v.abs() < 1e-8));
        }
    }
}

#[test]
fn lambda_zero_is_least_squares() {
    let (h, _, y) = gaussian_instance(3, 25, 4, 3, 0.2);
    let p = DecodeProblem::new(y.clone(), h.clone(), Mode::Lagrangian { lambda: 0.0 }).unwrap();
    let s = solve(&p, 1e-9, 10).unwrap();
    let ls = h.least_squares(&y, 1e-12).unwrap();
    assert!(s.converged);
    assert!(s.x_hat.iter().zip(&ls).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn small_lambda_reaches_least_squares() {
    let (h, _, y) = gaussian_instance(4, 40, 5, 4, 0.3);
    let ls = h.least_squares(&y, 1e-12).unwrap();
    let p = DecodeProblem::new(y, h, Mode::Lagrangian { lambda: 0.05 }).unwrap();
    let s = solve(&p, 1e-9, 100_000).unwrap();
    assert!(s.converged);
    // below λ = ‖r‖₂/‖r‖∞ the least-squares point is exactly optimal
    assert!(s.x_hat.iter().zip(&ls).all(|(a, b)| (a - b).abs() < 1e-8));
}

#[test]
fn certificate_detects_perturbation() {
    let (h, _, y) = gaussian_instance(5, 40, 5, 4, 0.1);
    for mode in [Mode::Lagrangian { lambda: 3.0 }, Mode::Lagrangian { lambda: 10.0 }, Mode::Constrained { epsilon: 0.4 }] {
        let p = DecodeProblem::new(y.clone(), h.clone(), mode).unwrap();
        let s = solve(&p, 1e-9, 100_000).unwrap();
        assert!(kkt_certificate(&p, &s) <= 1e-9);
        let mut bad = s.clone();
        bad.x_hat[0] += 0.1;
        assert!(kkt_certificate(&p, &bad) > 1e-3, "{mode:?}");
    }
}

#[test]
fn certificate_of_exact_optimum_is_zero() {
    let h = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
    let y = vec![1.0, 2.0, 3.0];
    let p = DecodeProblem::new(y, h, Mode::Lagrangian { lambda: 1.0 }).unwrap();
    let sol = DecodeSolution {
        x_hat: vec![1.0, 2.0],
        z_hat: vec![0.0; 3],
        objective: 0.0,
        iterations: 0,
        primal_residual: 0.0,
        dual_residual: 0.0,
        converged: true,
        certificate_gap: 0.0,
        dual: vec![0.0; 3],
    };
    assert_eq!(kkt_certificate(&p, &sol), 0.0);
}

#[test]
fn constrained_solution_stays_in_ball() {
    for seed in 0..5 {
        let (h, _, y) = gaussian_instance(20 + seed, 60, 10, 5, 0.3);
        let eps = 1.5;
        let p = DecodeProblem::new(y, h, Mode::Constrained { epsilon: eps }).unwrap();
        let s = solve(&p, 1e-9, 100_000).unwrap();
        assert!(s.converged);
        assert!(norm2(&s.z_hat) <= eps * (1.0 + 1e-9));
    }
}

#[test]
fn z_norm_nonincreasing_along_lambda_path() {
    let (h, _, y) = gaussian_instance(8, 60, 10, 6, 0.4);
    let mut prev = f64::INFINITY;
    for i in 1..=16 {
        let lambda = 0.5 * i as f64;
        let p = DecodeProblem::new(y.clone(), h.clone(), Mode::Lagrangian { lambda }).unwrap();
        let s = solve(&p, 1e-10, 100_000).unwrap();
        assert!(s.converged);
        let nz = norm2(&s.z_hat);
        assert!(nz <= prev + 1e-7, "lambda={lambda}: {nz} > {prev}");
        prev = nz;
    }
}

#[test]
fn objective_not_worse_than_ground_truth() {
    for seed in 0..5 {
        let mut rng = RngStream::new(100 + seed, 0).rng();
        let (n, m) = (50, 8);
        let h = Matrix::from_row_major(n, m, rng.normals(n * m));
        let x = rng.normals(m);
        let v: Vec<f64> = rng.normals(n).iter().map(|e| 0.1 * e).collect();
        let mut y: Vec<f64> = h.mul_vec(&x).iter().zip(&v).map(|(a, b)| a + b).collect();
        for i in rng.subset(n, 5) {
            y[i] += 10.0;
        }
        let eps = norm2(&v);
        let p = DecodeProblem::new(y, h, Mode::Constrained { epsilon: eps }).unwrap();
        let s = solve(&p, 1e-9, 100_000).unwrap();
        assert!(s.objective <= p.objective(&x, &v) + 1e-9);
    }
}

#[test]
fn iteration_cap_reports_not_converged() {
    let (h, _, y) = gaussian_instance(9, 80, 20, 8, 0.3);
    let p = DecodeProblem::new(y, h, Mode::Lagrangian { lambda: 12.0 }).unwrap();
    let s = solve(&p, 1e-12, 3).unwrap();
    assert!(!s.converged);
    assert_eq!(s.iterations, 3);
    assert!(matches!(s.ensure_converged(), Err(DecodeError::NotConverged { iterations: 3, .. })));
}

#[test]
fn validation_errors() {
    let h = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]);
    assert!(matches!(
        DecodeProblem::new(vec![1.0; 3], h, Mode::Lagrangian { lambda: 1.0 }),
        Err(DecodeError::RankDeficient { .. })
    ));
    assert!(matches!(
        DecodeProblem::new(vec![1.0; 2], ones(2), Mode::Lagrangian { lambda: 1.0 }),
        Ok(_)
    ));
    assert!(matches!(
        DecodeProblem::new(vec![1.0; 1], ones(1), Mode::Lagrangian { lambda: 1.0 }),
        Err(DecodeError::Dimension(_))
    ));
    assert!(matches!(
        DecodeProblem::new(vec![1.0; 3], ones(3), Mode::Constrained { epsilon: -1.0 }),
        Err(DecodeError::InvalidParameter(_))
    ));
    assert!(matches!(
        DecodeProblem::new(vec![1.0; 2], ones(3), Mode::Constrained { epsilon: 1.0 }),
        Err(DecodeError::Dimension(_))
    ));
    let p = DecodeProblem::new(vec![1.0; 3], ones(3), Mode::Constrained { epsilon: 1.0 }).unwrap();
    assert!(solve(&p, 0.0, 10).is_err());
}

#[test]
fn singular_value_examples() {
    assert!((min_singular_value(&Matrix::<f64>::identity(3)) - 1.0).abs() < 1e-14);
    let h = Matrix::from_rows(&[vec![3.0_f64, 0.0], vec![0.0, 4.0], vec![0.0, 0.0]]);
    assert!((min_singular_value(&h) - 3.0).abs() < 1e-14);
}

#[test]
fn theorem1_bound_examples() {
    assert_eq!(theorem1_bound(1.0_f64, 1.0, 3.0, 0.0), 0.0);
    assert!((theorem1_bound(1.0_f64, 1.0, 3.0, 1.0) - 4.0).abs() < 1e-15);
    // with σ_min = σ̄√n the bound equals ϖ·ε/√n
    let n = 400.0_f64;
    let sigma_bar = 1.0 - 0.5_f64.sqrt();
    let (alpha, c, eps) = (0.332, 2.42, 0.7);
    let varpi = 2.0 * (c + 1.0) / (sigma_bar * alpha * (c - 1.0));
    let b = theorem1_bound(sigma_bar * n.sqrt(), alpha, c, eps);
    assert!((b - varpi * eps / n.sqrt()).abs() < 1e-12);
    assert!((varpi - 49.6).abs() < 0.5);
}

#[test]
fn sparse_error_spec_validation() {
    let e = SparseErrorSpec::new(5, vec![1, 3], vec![2.0, -1.0]).unwrap();
    assert_eq!(e.to_dense(5), vec![0.0, 2.0, 0.0, -1.0, 0.0]);
    assert_eq!(e.k(), 2);
    assert!(SparseErrorSpec::new(5, vec![1, 1], vec![2.0, 2.0]).is_err());
    assert!(SparseErrorSpec::new(5, vec![7], vec![2.0]).is_err());
    assert!(SparseErrorSpec::<f64>::new(2, vec![0, 1], vec![1.0, 1.0]).is_err());
}

#[test]
fn single_precision_solve() {
    let h = Matrix::<f32>::from_fn(3, 1, |_, _| 1.0);
    let p = DecodeProblem::new(vec![5.0f32, 5.0, 15.0], h, Mode::Lagrangian { lambda: 10.0 }).unwrap();
    let s = solve(&p, 1e-4, 100_000).unwrap();
    assert!(s.converged);
    assert!((s.x_hat[0] - 5.0).abs() < 1e-4);
}

#[test]
fn warm_start_converges_quickly() {
    let (h, _, y) = gaussian_instance(12, 80, 20, 6, 0.2);
    let p = DecodeProblem::new(y, h, Mode::Lagrangian { lambda: 4.0 }).unwrap();
    let cold = solve(&p, 1e-9, 100_000).unwrap();
    let ws = WarmStart { x: &cold.x_hat, z: &cold.z_hat, dual: &cold.dual };
    let warm = solve_from(&p, 1e-9, 100_000, Some(ws)).unwrap();
    assert!(warm.converged && warm.iterations <= cold.iterations);
    assert!((warm.objective - cold.objective).abs() < 1e-9);
}

#[test]
fn tiny_data_scale_is_handled() {
    let (h, _, y) = gaussian_instance(13, 40, 8, 4, 0.1);
    let p = DecodeProblem::new(y.clone(), h.clone(), Mode::Lagrangian { lambda: 3.0 }).unwrap();
    let s = solve(&p, 1e-10, 100_000).unwrap();
    let scale = 1e-7;
    let small: Vec<f64> = y.iter().map(|v| v * scale).collect();
    let q = DecodeProblem::new(small, h, Mode::Lagrangian { lambda: 3.0 }).unwrap();
    let t = solve(&q, 1e-10, 100_000).unwrap();
    assert!(t.converged);
    assert!(t.iterations < 20_000);
    assert!(s.x_hat.iter().zip(&t.x_hat).all(|(a, b)| (a * scale - b).abs() < 1e-9 * scale));
}
