//! Bundled and generated test networks.

use crate::experiments::rng::RngStream;
use crate::scalar::Real;

use super::{parse_case, Admittance, Line, Measurement, MeasurementPlan, PowerNetwork};

/// Text of the bundled four-bus case: 4 buses, 5 lines, 22 measurements.
pub const SAMPLE_CASE_4BUS: &str = include_str!("../../cases/sample4.case");

pub fn sample_case_4bus() -> (PowerNetwork<f64>, MeasurementPlan) {
    parse_case(SAMPLE_CASE_4BUS).expect("bundled case parses")
}

/// A connected network on `buses ≥ 3` buses: a ring plus `buses / 3` random
/// chords, with line data `r ∈ [0.01, 0.08]`, `x/r ∈ [2.5, 4.5]`,
/// `b ∈ [0, 0.05]` turned into polar admittances as in a bus admittance
/// matrix (off-diagonal `−1/(r + jx)`, diagonal sum of series and half line
/// charging). The plan measures P and Q injections at every bus and P and Q
/// flows at both ends of every line. Bus ids are `1..=buses`,
/// bus 1 is the reference.
pub fn synthetic_case<T: Real>(buses: usize, seed: u64) -> (PowerNetwork<T>, MeasurementPlan) {
    assert!(buses >= 3, "synthetic network needs at least 3 buses");
    let mut rng = RngStream::new(seed, 0).rng();
    let mut pairs: Vec<(usize, usize)> = (0..buses).map(|i| (i.min((i + 1) % buses), i.max((i + 1) % buses))).collect();
    let mut chords = 0;
    while chords < buses / 3 {
        let a = rng.below(buses as u64) as usize;
        let b = rng.below(buses as u64) as usize;
        let (i, j) = (a.min(b), a.max(b));
        if i != j && !pairs.contains(&(i, j)) {
            pairs.push((i, j));
            chords += 1;
        }
    }
    pairs.sort_unstable();

    let mut diag = vec![(0.0f64, 0.0f64); buses];
    let mut lines = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let r = rng.uniform_in(0.01, 0.08);
        let x = r * rng.uniform_in(2.5, 4.5);
        let b = rng.uniform_in(0.0, 0.05);
        let d = r * r + x * x;
        // series admittance y = (r − jx)/d; the off-diagonal entry is −y
        let (g, s) = (r / d, -x / d);
        for k in [i, j] {
            diag[k].0 += g;
            diag[k].1 += s + b / 2.0;
        }
        let shunt = Admittance::new(T::lit(b / 2.0), T::FRAC_PI_2());
        lines.push(Line {
            from: i,
            to: j,
            admittance: Admittance::new(T::lit(d.sqrt().recip()), T::lit((-s).atan2(-g))),
            shunt_from: shunt,
            shunt_to: shunt,
        });
    }
    let diagonal = diag.iter().map(|&(re, im)| Admittance::new(T::lit(re.hypot(im)), T::lit(im.atan2(re)))).collect();
    let ids = (1..=buses as u32).collect();
    let net = PowerNetwork::new(ids, 0, lines, diagonal).expect("generated network is valid");

    let mut entries = Vec::new();
    for i in 0..buses {
        entries.push(Measurement::PInjection(i));
        entries.push(Measurement::QInjection(i));
    }
    for &(i, j) in &pairs {
        entries.push(Measurement::PFlow(i, j));
        entries.push(Measurement::QFlow(i, j));
        entries.push(Measurement::PFlow(j, i));
        entries.push(Measurement::QFlow(j, i));
    }
    let plan = MeasurementPlan::new(&net, entries).expect("generated plan is valid");
    (net, plan)
}
