use super::*;
use crate::experiments::rng::{RngStream, StreamRng};
use std::f64::consts::PI;

fn two_bus(y: f64, theta: f64) -> (PowerNetwork<f64>, MeasurementPlan) {
    let line = Line {
        from: 0,
        to: 1,
        admittance: Admittance::new(y, theta),
        shunt_from: Admittance::zero(),
        shunt_to: Admittance::zero(),
    };
    let net = PowerNetwork::new(vec![1, 2], 1, vec![line], vec![Admittance::zero(); 2]).unwrap();
    let plan = MeasurementPlan::new(&net, vec![Measurement::PFlow(0, 1), Measurement::QFlow(0, 1)]).unwrap();
    (net, plan)
}

fn random_network(rng: &mut StreamRng, k: usize) -> (PowerNetwork<f64>, MeasurementPlan) {
    let mut lines = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if j == i + 1 || rng.uniform() < 0.5 {
                lines.push(Line {
                    from: i,
                    to: j,
                    admittance: Admittance::new(rng.uniform_in(0.5, 20.0), rng.uniform_in(-PI, PI)),
                    shunt_from: Admittance::new(rng.uniform_in(0.0, 0.1), rng.uniform_in(-PI, PI)),
                    shunt_to: Admittance::new(rng.uniform_in(0.0, 0.1), rng.uniform_in(-PI, PI)),
                });
            }
        }
    }
    let diag = (0..k).map(|_| Admittance::new(rng.uniform_in(0.0, 30.0), rng.uniform_in(-PI, PI))).collect();
    let ids = (10..10 + k as u32).collect();
    let reference = rng.below(k as u64) as usize;
    let mut entries = Vec::new();
    for i in 0..k {
        entries.push(Measurement::PInjection(i));
        entries.push(Measurement::QInjection(i));
    }
    for l in &lines {
        entries.push(Measurement::PFlow(l.from, l.to));
        entries.push(Measurement::QFlow(l.to, l.from));
    }
    let net = PowerNetwork::new(ids, reference, lines, diag).unwrap();
    let plan = MeasurementPlan::new(&net, entries).unwrap();
    (net, plan)
}

fn random_state(rng: &mut StreamRng, net: &PowerNetwork<f64>) -> StateVector<f64> {
    let k = net.bus_count();
    StateVector {
        magnitudes: (0..k).map(|_| rng.uniform_in(0.8, 1.2)).collect(),
        angles: (0..k - 1).map(|_| rng.uniform_in(-0.5, 0.5)).collect(),
        reference_bus: net.reference_bus(),
    }
}

#[test]
fn zero_admittances_give_zero_model() {
    let net = PowerNetwork::new(vec![1, 2], 1, Vec::new(), vec![Admittance::zero(); 2]).unwrap();
    let plan = MeasurementPlan::new(&net, vec![Measurement::PInjection(0), Measurement::QInjection(1)]).unwrap();
    let x = StateVector { magnitudes: vec![1.1, 0.9], angles: vec![0.3], reference_bus: 1 };
    assert_eq!(evaluate_h(&net, &plan, &x), vec![0.0, 0.0]);
    assert!(jacobian(&net, &plan, &x).as_slice().iter().all(|v| *v == 0.0));
}

#[test]
fn two_bus_flow_by_hand() {
    let (net, plan) = two_bus(1.0, PI);
    let flat = StateVector::flat_start(&net);
    assert!(evaluate_h(&net, &plan, &flat)[0].abs() < 1e-15);

    let x = StateVector { magnitudes: vec![1.0, 1.0], angles: vec![0.1], reference_bus: 1 };
    let h = evaluate_h(&net, &plan, &x);
    assert!((h[0] - (1.0 - 0.1f64.cos())).abs() < 1e-15);
    assert!((h[0] - 0.004_995_834_721_974_18).abs() < 1e-15);
    let jac = jacobian(&net, &plan, &x);
    // column 2 is δ₁ (bus 2 is the reference)
    assert!((jac[(0, 2)] - 0.1f64.sin()).abs() < 1e-15);
    assert!((jac[(0, 2)] - 0.099_833_416_646_828_15).abs() < 1e-15);
}

#[test]
fn jacobian_matches_central_differences() {
    let mut rng = RngStream::new(77, 0).rng();
    for _ in 0..50 {
        let (net, plan) = random_network(&mut rng, 4);
        let x = random_state(&mut rng, &net);
        let jac = jacobian(&net, &plan, &x);
        let base = x.to_vec();
        let step = 1e-6;
        for c in 0..base.len() {
            let mut up = base.clone();
            let mut dn = base.clone();
            up[c] += step;
            dn[c] -= step;
            let hu = evaluate_h(&net, &plan, &StateVector::from_vec(&net, &up).unwrap());
            let hd = evaluate_h(&net, &plan, &StateVector::from_vec(&net, &dn).unwrap());
            for r in 0..plan.len() {
                let fd = (hu[r] - hd[r]) / (2.0 * step);
                let err = (fd - jac[(r, c)]).abs() / jac[(r, c)].abs().max(1.0);
                assert!(err <= 1e-6, "row {r} col {c}: analytic {} fd {fd}", jac[(r, c)]);
            }
        }
    }
}

#[test]
fn common_angle_shift_changes_nothing() {
    let mut rng = RngStream::new(5, 0).rng();
    for _ in 0..20 {
        let (net, plan) = random_network(&mut rng, 5);
        let x = random_state(&mut rng, &net);
        let d = x.full_angles();
        let base = evaluate_with_angles(&net, &plan, &x.magnitudes, &d);
        let c = rng.uniform_in(-3.0, 3.0);
        let shifted: Vec<f64> = d.iter().map(|a| a + c).collect();
        let moved = evaluate_with_angles(&net, &plan, &x.magnitudes, &shifted);
        for (a, b) in base.iter().zip(&moved) {
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn permuting_plan_permutes_output() {
    let mut rng = RngStream::new(6, 0).rng();
    let (net, plan) = random_network(&mut rng, 5);
    let x = random_state(&mut rng, &net);
    let h = evaluate_h(&net, &plan, &x);
    let jac = jacobian(&net, &plan, &x);
    let perm: Vec<usize> = rng.subset(plan.len(), plan.len());
    let shuffled = MeasurementPlan::new(&net, perm.iter().map(|&p| plan.entries()[p]).collect()).unwrap();
    let hs = evaluate_h(&net, &shuffled, &x);
    let js = jacobian(&net, &shuffled, &x);
    for (r, &p) in perm.iter().enumerate() {
        assert_eq!(hs[r], h[p]);
        assert_eq!(js.row(r), jac.row(p));
    }
}

#[test]
fn flat_start_layout() {
    let (net, _) = synthetic_case::<f64>(30, 1);
    let x = flat_start(&net);
    assert_eq!(x.magnitudes, vec![1.0; 30]);
    assert_eq!(x.angles, vec![0.0; 29]);
    assert_eq!(x.dim(), 59);
    let (net2, _) = two_bus(1.0, 0.0);
    let x2 = flat_start(&net2);
    assert_eq!(x2.dim(), net2.state_dim());
    assert_eq!((x2.magnitudes, x2.angles), (vec![1.0, 1.0], vec![0.0]));
}

#[test]
fn sample_case_counts() {
    let (net, plan) = sample_case_4bus();
    assert_eq!(net.bus_count(), 4);
    assert_eq!(net.lines().len(), 5);
    assert_eq!(plan.len(), 22);
    assert_eq!(net.reference_bus(), 0);
    assert_eq!(plan.entries()[18], Measurement::PFlow(3, 1));
    // shunt lookup is end-specific but symmetric data here
    assert_eq!(net.shunt(3, 1).magnitude, 0.02);
    assert_eq!(net.admittance(1, 3), net.admittance(3, 1));
}

#[test]
fn canonical_round_trip() {
    let (net, plan) = sample_case_4bus();
    let text = serialize_case(&net, &plan);
    let (net2, plan2) = parse_case::<f64>(&text).unwrap();
    assert_eq!(net2, net);
    assert_eq!(plan2, plan);
    assert_eq!(serialize_case(&net2, &plan2), text);

    let messy = "# unordered\n[MEAS]\nPF 7 3\nPI 3\n[BUS]\n7\n3 ref\n[LINE]\n7 3 2 0.5 0.1 1 0.2 1.5 # trailing\n";
    let (n3, p3) = parse_case::<f64>(messy).unwrap();
    let canon = serialize_case(&n3, &p3);
    assert_eq!(canon, "[BUS]\n3 ref\n7\n[LINE]\n3 7 2 0.5 0.2 1.5 0.1 1\n[DIAG]\n[MEAS]\nPF 7 3\nPI 3\n");
    let (n4, p4) = parse_case::<f64>(&canon).unwrap();
    assert_eq!((n4, p4), (n3.clone(), p3));
    // the 7-end shunt is used for the flow from 7
    assert_eq!(n3.shunt(1, 0), Admittance::new(0.1, 1.0));
}

#[test]
fn generated_networks_round_trip() {
    let (net, plan) = synthetic_case::<f64>(14, 3);
    let text = serialize_case(&net, &plan);
    let (net2, plan2) = parse_case::<f64>(&text).unwrap();
    assert_eq!(plan2, plan);
    assert_eq!(serialize_case(&net2, &plan2), text);
    let x = flat_start(&net);
    assert_eq!(evaluate_h(&net, &plan, &x), evaluate_h(&net2, &plan2, &flat_start(&net2)));
}

#[test]
fn case_errors() {
    let neg = "[BUS]\n1\n2\n[LINE]\n1 2 -1 0 0 0 0 0\n";
    assert!(matches!(parse_case::<f64>(neg), Err(CaseError::Validation(_))));
    let bad_num = "[BUS]\n1\n2\n[LINE]\n1 2 x 0 0 0 0 0\n";
    assert_eq!(parse_case::<f64>(bad_num).unwrap_err(), CaseError::Parse { line: 5, reason: "`x` is not a number".into() });
    let short = "[BUS]\n1\n2\n[LINE]\n1 2 1 0\n";
    assert!(matches!(parse_case::<f64>(short), Err(CaseError::Parse { line: 5, .. })));
    let unknown_bus = "[BUS]\n1\n2\n[MEAS]\nPI 3\n";
    assert!(matches!(parse_case::<f64>(unknown_bus), Err(CaseError::Validation(_))));
    let no_line = "[BUS]\n1\n2\n[MEAS]\nPF 1 2\n";
    assert!(matches!(parse_case::<f64>(no_line), Err(CaseError::Validation(_))));
    let two_refs = "[BUS]\n1 ref\n2 ref\n";
    assert!(matches!(parse_case::<f64>(two_refs), Err(CaseError::Validation(_))));
    let dup = "[BUS]\n1\n1\n";
    assert!(matches!(parse_case::<f64>(dup), Err(CaseError::Validation(_))));
    let orphan = "1\n[BUS]\n1\n";
    assert!(matches!(parse_case::<f64>(orphan), Err(CaseError::Parse { line: 1, .. })));
    let section = "[BUSES]\n1\n";
    assert!(matches!(parse_case::<f64>(section), Err(CaseError::Parse { line: 1, .. })));
    let kind = "[BUS]\n1\n[MEAS]\nVM 1\n";
    assert!(matches!(parse_case::<f64>(kind), Err(CaseError::Parse { line: 4, .. })));
    assert!(matches!(parse_case::<f64>(""), Err(CaseError::Validation(_))));
}

#[test]
fn state_file_round_trip() {
    let (net, _) = sample_case_4bus();
    let x = StateVector { magnitudes: vec![1.0, 0.98, 1.02, 0.97], angles: vec![-0.05, 0.1, -0.125], reference_bus: 0 };
    let text = write_state(&net, &x);
    assert_eq!(text, "bus,magnitude,angle\n1,1,0\n2,0.98,-0.05\n3,1.02,0.1\n4,0.97,-0.125\n");
    assert_eq!(parse_state(&net, &text).unwrap(), x);
    assert!(parse_state(&net, "bus,magnitude,angle\n1,1,0.1\n2,1,0\n3,1,0\n4,1,0\n").is_err());
    assert!(parse_state(&net, "1,1,0\n2,1,0\n3,1,0\n").is_err());
    assert!(parse_state(&net, "1,1,0\n2,-1,0\n3,1,0\n4,1,0\n").is_err());
}

#[test]
fn measurement_file_round_trip() {
    let (net, plan) = sample_case_4bus();
    let values: Vec<f64> = (0..plan.len()).map(|k| 0.25 * k as f64 - 1.5).collect();
    let text = write_measurements(&net, &plan, &values);
    assert!(text.starts_with("measurement,value\nPI 1,-1.5\n"));
    assert_eq!(parse_measurements(&net, &plan, &text).unwrap(), values);
    // rows may come in any order, header optional
    let mut rows: Vec<&str> = text.lines().skip(1).collect();
    rows.reverse();
    assert_eq!(parse_measurements(&net, &plan, &rows.join("\n")).unwrap(), values);
    let short = rows[1..].join("\n");
    assert!(matches!(parse_measurements(&net, &plan, &short), Err(CaseError::Validation(_))));
    let twice = format!("{text}PI 1,0\n");
    assert!(matches!(parse_measurements(&net, &plan, &twice), Err(CaseError::Validation(_))));
    assert!(matches!(parse_measurements(&net, &plan, "PI 1\n"), Err(CaseError::Parse { line: 1, .. })));
    assert!(matches!(parse_measurements(&net, &plan, "PX 1,2\n"), Err(CaseError::Parse { line: 1, .. })));
    assert!(parse_measurements(&net, &plan, "PF 1 4,2\n").is_err());
}

#[test]
fn measurement_labels() {
    let (net, plan) = sample_case_4bus();
    for &e in plan.entries() {
        assert_eq!(parse_measurement(&net, &measurement_label(&net, e)).unwrap(), e);
    }
    assert_eq!(parse_measurement(&net, "qf 3 1").unwrap(), Measurement::QFlow(2, 0));
    assert!(parse_measurement(&net, "PI 9").is_err());
    assert!(parse_measurement(&net, "PF 1").is_err());
}

#[test]
fn generated_jacobian_has_full_rank() {
    for seed in 0..5 {
        let (net, plan) = synthetic_case::<f64>(14, seed);
        assert_eq!(plan.len(), 2 * 14 + 4 * net.lines().len());
        let jac = jacobian(&net, &plan, &flat_start(&net));
        let sv = jac.singular_values();
        assert!(sv[sv.len() - 1] > 1e-6 * sv[0]);
    }
}

#[test]
fn single_precision_agrees() {
    let (net64, plan) = sample_case_4bus();
    let (net32, _) = parse_case::<f32>(SAMPLE_CASE_4BUS).unwrap();
    let x64 = StateVector { magnitudes: vec![1.0, 0.98, 1.02, 0.97], angles: vec![-0.05, 0.1, -0.12], reference_bus: 0 };
    let x32 = StateVector {
        magnitudes: x64.magnitudes.iter().map(|&v| v as f32).collect(),
        angles: x64.angles.iter().map(|&v| v as f32).collect(),
        reference_bus: 0,
    };
    let h64 = evaluate_h(&net64, &plan, &x64);
    let h32 = evaluate_h(&net32, &plan, &x32);
    for (a, b) in h64.iter().zip(&h32) {
        assert!((a - *b as f64).abs() < 1e-4 * (1.0 + a.abs()));
    }
}
