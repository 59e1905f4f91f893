mod common;

use robust_se::decoder::io::parse_problem;
use robust_se::decoder::{kkt_certificate, optimal_z, solve, DecodeProblem, Mode};
use robust_se::experiments::rng::RngStream;
use robust_se::linalg::Matrix;

fn random_problem(seed: u64, n: usize, m: usize, mode: Mode<f64>) -> DecodeProblem<f64> {
    let mut rng = RngStream::new(seed, 7).rng();
    let h = Matrix::from_row_major(n, m, rng.normals(n * m));
    let x = rng.normals(m);
    let mut y = h.mul_vec(&x);
    for v in y.iter_mut() {
        *v += 0.3 * rng.normal();
    }
    for i in rng.subset(n, n / 5) {
        y[i] += rng.uniform_in(-6.0, 6.0);
    }
    DecodeProblem::new(y, h, mode).unwrap()
}

#[test]
fn matches_external_conic_solver() {
    let text = include_str!("data/random_20x8.csv");
    let base = parse_problem::<f64>(text).unwrap();
    let optima = include_str!("data/random_20x8_optima.csv");
    for line in optima.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let param: f64 = f[1].parse().unwrap();
        let expected: f64 = f[2].parse().unwrap();
        let mode = match f[0] {
            "lagrangian" => Mode::Lagrangian { lambda: param },
            _ => Mode::Constrained { epsilon: param },
        };
        let p = base.with_mode(mode).unwrap();
        let s = solve(&p, 1e-9, 100_000).unwrap();
        assert!(s.converged, "{line}");
        assert!((s.objective - expected).abs() <= 1e-6 * (1.0 + expected), "{line}: got {}", s.objective);
    }
}

#[test]
fn tiny_instances_match_grid_free_oracle() {
    for seed in 0..12u64 {
        let m = 1 + (seed % 2) as usize;
        let n = 4 + (seed % 3) as usize;
        let mode = if seed % 4 < 2 {
            Mode::Lagrangian { lambda: 0.3 + 0.4 * seed as f64 }
        } else {
            Mode::Constrained { epsilon: 0.1 * seed as f64 }
        };
        let p = random_problem(seed, n, m, mode);
        let s = solve(&p, 1e-10, 100_000).unwrap();
        assert!(s.converged);
        let (x_star, oracle) = common::tiny_optimum(&p, 60.0);
        assert!(x_star.iter().all(|v| v.abs() < 59.0));
        assert!((s.objective - oracle).abs() <= 1e-7 * (1.0 + oracle), "seed {seed}: solver {} oracle {oracle}", s.objective);
    }
}

#[test]
fn pure_l1_limits_match_vertex_enumeration() {
    for seed in 0..6u64 {
        let (n, m) = (12, 3);
        let p = random_problem(100 + seed, n, m, Mode::Constrained { epsilon: 0.0 });
        let l1 = common::l1_by_vertices(p.h(), p.y());
        for mode in [
            Mode::Constrained { epsilon: 0.0 },
            Mode::Lagrangian { lambda: (n as f64).sqrt() },
            Mode::Lagrangian { lambda: 1e3 },
        ] {
            let s = solve(&p.with_mode(mode).unwrap(), 1e-10, 100_000).unwrap();
            assert!(s.converged);
            assert!((s.objective - l1).abs() <= 1e-8 * (1.0 + l1), "{mode:?}: {} vs {l1}", s.objective);
            assert!(s.z_hat.iter().all(|z| *z == 0.0));
        }
    }
}

#[test]
fn certificates_on_seeded_instances() {
    for seed in 0..30u64 {
        let mode = if seed % 2 == 0 {
            Mode::Lagrangian { lambda: 0.5 + 0.4 * seed as f64 }
        } else {
            Mode::Constrained { epsilon: 0.2 * seed as f64 }
        };
        let p = random_problem(1000 + seed, 60, 15, mode);
        let tol = 1e-8;
        let s = solve(&p, tol, 100_000).unwrap();
        assert!(s.converged);
        assert!(kkt_certificate(&p, &s) <= 10.0 * tol);
    }
}

#[test]
fn closed_form_inner_minimizer_matches_search() {
    let mut rng = RngStream::new(4242, 0).rng();
    for trial in 0..300 {
        let n = 1 + rng.below(12) as usize;
        let r: Vec<f64> = (0..n).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
        let mode = if trial % 2 == 0 {
            Mode::Lagrangian { lambda: rng.uniform_in(0.0, 4.0) }
        } else {
            Mode::Constrained { epsilon: rng.uniform_in(0.0, 4.0) }
        };
        let z = optimal_z(&r, mode);
        let l1: f64 = r.iter().zip(&z).map(|(a, b)| (a - b).abs()).sum();
        let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let value = match mode {
            Mode::Lagrangian { lambda } => l1 + lambda * nz,
            Mode::Constrained { epsilon } => {
                assert!(nz <= epsilon * (1.0 + 1e-12));
                l1
            }
        };
        let oracle = common::inner_value(&r, mode);
        assert!((value - oracle).abs() <= 1e-9, "{mode:?} {r:?}: {value} vs {oracle}");
    }
}
