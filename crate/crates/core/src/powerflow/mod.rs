//! Nonlinear power-network measurement model.
//!
//! With bus voltages `E_i∠δ_i` and admittances `Y_ij∠θ_ij`:
//!
//! ```text
//! P_i  = Σ_j E_i E_j Y_ij cos(θ_ij + δ_i − δ_j)
//! Q_i  = Σ_j E_i E_j Y_ij sin(θ_ij + δ_i − δ_j)
//! P_ij = E_i E_j Y_ij cos(θ_ij + δ_i − δ_j) − E_i² Y_ij cos θ_ij + E_i² Y_si cos θ_si
//! Q_ij = E_i E_j Y_ij sin(θ_ij + δ_i − δ_j) − E_i² Y_ij sin θ_ij + E_i² Y_si sin θ_si
//! ```
//!
//! The injection sums include the diagonal term `j = i` (`Y_ii∠θ_ii`). The
//! shunt in a flow `P_ij`/`Q_ij` is the `i`-end shunt of the line between `i`
//! and `j`. State vectors hold all magnitudes first, then the angles of every
//! bus except the reference bus, whose angle is zero.

mod case;
mod synthetic;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Real;

pub use case::{
    measurement_label, parse_case, parse_measurement, parse_measurements, parse_state, serialize_case, write_measurements,
    write_state,
};
pub use synthetic::{sample_case_4bus, synthetic_case, SAMPLE_CASE_4BUS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaseError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid case: {0}")]
    Validation(String),
}

/// Polar admittance `magnitude∠angle` (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admittance<T> {
    pub magnitude: T,
    pub angle: T,
}

impl<T: Real> Admittance<T> {
    pub fn new(magnitude: T, angle: T) -> Self {
        Self { magnitude, angle }
    }

    pub fn zero() -> Self {
        Self { magnitude: T::zero(), angle: T::zero() }
    }
}

/// A branch between two buses (internal indices) with a shunt at each end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line<T> {
    pub from: usize,
    pub to: usize,
    pub admittance: Admittance<T>,
    pub shunt_from: Admittance<T>,
    pub shunt_to: Admittance<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork<T> {
    bus_ids: Vec<u32>,
    reference_bus: usize,
    lines: Vec<Line<T>>,
    diagonal: Vec<Admittance<T>>,
    // k×k lookup into `lines`
    line_at: Vec<Option<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl<T: Real> PowerNetwork<T> {
    /// Buses are addressed by their position in `bus_ids` (which must be
    /// distinct); `diagonal` holds `Y_ii∠θ_ii` per bus.
    pub fn new(
        bus_ids: Vec<u32>,
        reference_bus: usize,
        lines: Vec<Line<T>>,
        diagonal: Vec<Admittance<T>>,
    ) -> Result<Self, CaseError> {
        let k = bus_ids.len();
        let invalid = |msg: String| Err(CaseError::Validation(msg));
        if k == 0 {
            return invalid("network has no buses".into());
        }
        let mut sorted = bus_ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return invalid("duplicate bus id".into());
        }
        if reference_bus >= k {
            return invalid(format!("reference bus index {reference_bus} out of range"));
        }
        if diagonal.len() != k {
            return invalid(format!("expected {k} diagonal entries, got {}", diagonal.len()));
        }
        for (i, d) in diagonal.iter().enumerate() {
            check_admittance(d, &format!("diagonal of bus {}", bus_ids[i]))?;
        }
        let mut line_at = vec![None; k * k];
        let mut neighbors = vec![Vec::new(); k];
        for (idx, l) in lines.iter().enumerate() {
            if l.from >= k || l.to >= k {
                return invalid(format!("line {idx} references a bus index out of range"));
            }
            if l.from == l.to {
                return invalid(format!("line {idx} connects bus {} to itself", bus_ids[l.from]));
            }
            let name = format!("line {}-{}", bus_ids[l.from], bus_ids[l.to]);
            check_admittance(&l.admittance, &name)?;
            check_admittance(&l.shunt_from, &name)?;
            check_admittance(&l.shunt_to, &name)?;
            if line_at[l.from * k + l.to].is_some() {
                return invalid(format!("duplicate {name}"));
            }
            line_at[l.from * k + l.to] = Some(idx);
            line_at[l.to * k + l.from] = Some(idx);
            neighbors[l.from].push(l.to);
            neighbors[l.to].push(l.from);
        }
        Ok(Self { bus_ids, reference_bus, lines, diagonal, line_at, neighbors })
    }

    /// Number of buses `k'`.
    pub fn bus_count(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn reference_bus(&self) -> usize {
        self.reference_bus
    }

    pub fn bus_ids(&self) -> &[u32] {
        &self.bus_ids
    }

    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.bus_ids.iter().position(|&b| b == id)
    }

    pub fn lines(&self) -> &[Line<T>] {
        &self.lines
    }

    pub fn diagonal(&self, i: usize) -> Admittance<T> {
        self.diagonal[i]
    }

    /// `Y_ij∠θ_ij`; the diagonal entry for `i == j`, zero for unconnected pairs.
    pub fn admittance(&self, i: usize, j: usize) -> Admittance<T> {
        if i == j {
            return self.diagonal[i];
        }
        self.line(i, j).map_or_else(Admittance::zero, |l| l.admittance)
    }

    /// Shunt at the `i` end of the line between `i` and `j`.
    pub fn shunt(&self, i: usize, j: usize) -> Admittance<T> {
        match self.line(i, j) {
            Some(l) if l.from == i => l.shunt_from,
            Some(l) => l.shunt_to,
            None => Admittance::zero(),
        }
    }

    pub fn line(&self, i: usize, j: usize) -> Option<&Line<T>> {
        let k = self.bus_count();
        if i >= k || j >= k {
            return None;
        }
        self.line_at[i * k + j].map(|idx| &self.lines[idx])
    }

    /// State dimension `2k' − 1`.
    pub fn state_dim(&self) -> usize {
        2 * self.bus_count() - 1
    }

    /// Column of bus `b`'s angle in the state vector, `None` for the reference bus.
    pub fn angle_column(&self, b: usize) -> Option<usize> {
        let k = self.bus_count();
        match b.cmp(&self.reference_bus) {
            std::cmp::Ordering::Less => Some(k + b),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(k + b - 1),
        }
    }
}

fn check_admittance<T: Real>(a: &Admittance<T>, what: &str) -> Result<(), CaseError> {
    if !a.magnitude.is_finite() || !a.angle.is_finite() {
        return Err(CaseError::Validation(format!("{what}: non-finite admittance")));
    }
    if a.magnitude < T::zero() {
        return Err(CaseError::Validation(format!("{what}: negative admittance magnitude {}", a.magnitude)));
    }
    Ok(())
}

/// One measured quantity; bus arguments are internal indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measurement {
    PInjection(usize),
    QInjection(usize),
    PFlow(usize, usize),
    QFlow(usize, usize),
}

/// Ordered list of measurements; the order fixes the layout of `h(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementPlan {
    entries: Vec<Measurement>,
}

impl MeasurementPlan {
    /// Checks bus indices and that every flow runs along an existing line
    /// with nonzero admittance.
    pub fn new<T: Real>(net: &PowerNetwork<T>, entries: Vec<Measurement>) -> Result<Self, CaseError> {
        let k = net.bus_count();
        for (pos, e) in entries.iter().enumerate() {
            let bad = |msg: &str| Err(CaseError::Validation(format!("measurement {}: {msg}", pos + 1)));
            match *e {
                Measurement::PInjection(i) | Measurement::QInjection(i) => {
                    if i >= k {
                        return bad("bus out of range");
                    }
                }
                Measurement::PFlow(i, j) | Measurement::QFlow(i, j) => {
                    if i >= k || j >= k {
                        return bad("bus out of range");
                    }
                    if i == j {
                        return bad("flow from a bus to itself");
                    }
                    match net.line(i, j) {
                        Some(l) if l.admittance.magnitude > T::zero() => {}
                        _ => return bad("flow along a pair without a line"),
                    }
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Measurement] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Position of `m` in the plan.
    pub fn position(&self, m: Measurement) -> Option<usize> {
        self.entries.iter().position(|&e| e == m)
    }
}

/// Bus voltage magnitudes and angles; the reference angle is implicit zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    pub magnitudes: Vec<T>,
    /// One angle per non-reference bus, in bus order.
    pub angles: Vec<T>,
    pub reference_bus: usize,
}

impl<T: Real> StateVector<T> {
    /// Unit magnitudes, zero angles.
    pub fn flat_start(net: &PowerNetwork<T>) -> Self {
        let k = net.bus_count();
        Self { magnitudes: vec![T::one(); k], angles: vec![T::zero(); k - 1], reference_bus: net.reference_bus() }
    }

    /// Reads the `2k' − 1` layout (magnitudes, then non-reference angles).
    pub fn from_vec(net: &PowerNetwork<T>, v: &[T]) -> Option<Self> {
        let k = net.bus_count();
        if v.len() != 2 * k - 1 {
            return None;
        }
        Some(Self { magnitudes: v[..k].to_vec(), angles: v[k..].to_vec(), reference_bus: net.reference_bus() })
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.magnitudes.iter().chain(&self.angles).copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.magnitudes.len() + self.angles.len()
    }

    /// Angles of all buses, with zero inserted at the reference bus.
    pub fn full_angles(&self) -> Vec<T> {
        let mut out = self.angles.clone();
        out.insert(self.reference_bus, T::zero());
        out
    }

    fn matches(&self, net: &PowerNetwork<T>) -> bool {
        let k = net.bus_count();
        self.magnitudes.len() == k && self.angles.len() == k - 1 && self.reference_bus == net.reference_bus()
    }
}

/// `flat_start` as a free function.
pub fn flat_start<T: Real>(net: &PowerNetwork<T>) -> StateVector<T> {
    StateVector::flat_start(net)
}

/// `h(x)` in plan order.
///
/// # Panics
/// If `x` does not have the network's dimensions.
pub fn evaluate_h<T: Real>(net: &PowerNetwork<T>, plan: &MeasurementPlan, x: &StateVector<T>) -> Vec<T> {
    assert!(x.matches(net), "state vector does not match the network");
    evaluate_with_angles(net, plan, &x.magnitudes, &x.full_angles())
}

// Same as `evaluate_h` with an explicit angle for every bus.
pub(crate) fn evaluate_with_angles<T: Real>(net: &PowerNetwork<T>, plan: &MeasurementPlan, e: &[T], d: &[T]) -> Vec<T> {
    plan.entries()
        .iter()
        .map(|&meas| match meas {
            Measurement::PInjection(i) | Measurement::QInjection(i) => {
                let use_cos = matches!(meas, Measurement::PInjection(_));
                let trig = |a: T| if use_cos { a.cos() } else { a.sin() };
                let yd = net.diagonal(i);
                let mut s = e[i] * e[i] * yd.magnitude * trig(yd.angle);
                for &j in &net.neighbors[i] {
                    let y = net.admittance(i, j);
                    s = s + e[i] * e[j] * y.magnitude * trig(y.angle + d[i] - d[j]);
                }
                s
            }
            Measurement::PFlow(i, j) | Measurement::QFlow(i, j) => {
                let use_cos = matches!(meas, Measurement::PFlow(..));
                let trig = |a: T| if use_cos { a.cos() } else { a.sin() };
                let y = net.admittance(i, j);
                let ys = net.shunt(i, j);
                e[i] * e[j] * y.magnitude * trig(y.angle + d[i] - d[j]) - e[i] * e[i] * y.magnitude * trig(y.angle)
                    + e[i] * e[i] * ys.magnitude * trig(ys.angle)
            }
        })
        .collect()
}

/// Analytic Jacobian of [`evaluate_h`], `n × (2k' − 1)`.
pub fn jacobian<T: Real>(net: &PowerNetwork<T>, plan: &MeasurementPlan, x: &StateVector<T>) -> Matrix<T> {
    assert!(x.matches(net), "state vector does not match the network");
    let e = &x.magnitudes;
    let d = x.full_angles();
    let two = T::lit(2.0);
    let mut jac = Matrix::zeros(plan.len(), net.state_dim());
    for (row, &meas) in plan.entries().iter().enumerate() {
        // writes ∂/∂δ_b unless b is the reference bus
        let put_angle = |jac: &mut Matrix<T>, b: usize, v: T| {
            if let Some(c) = net.angle_column(b) {
                jac[(row, c)] = jac[(row, c)] + v;
            }
        };
        match meas {
            Measurement::PInjection(i) | Measurement::QInjection(i) => {
                let p = matches!(meas, Measurement::PInjection(_));
                // (f, f') = (cos, −sin) for P, (sin, cos) for Q
                let f = |a: T| if p { a.cos() } else { a.sin() };
                let df = |a: T| if p { -a.sin() } else { a.cos() };
                let yd = net.diagonal(i);
                jac[(row, i)] = two * e[i] * yd.magnitude * f(yd.angle);
                for &j in &net.neighbors[i] {
                    let y = net.admittance(i, j);
                    let a = y.angle + d[i] - d[j];
                    jac[(row, i)] = jac[(row, i)] + e[j] * y.magnitude * f(a);
                    jac[(row, j)] = jac[(row, j)] + e[i] * y.magnitude * f(a);
                    let g = e[i] * e[j] * y.magnitude * df(a);
                    put_angle(&mut jac, i, g);
                    put_angle(&mut jac, j, -g);
                }
            }
            Measurement::PFlow(i, j) | Measurement::QFlow(i, j) => {
                let p = matches!(meas, Measurement::PFlow(..));
                let f = |a: T| if p { a.cos() } else { a.sin() };
                let df = |a: T| if p { -a.sin() } else { a.cos() };
                let y = net.admittance(i, j);
                let ys = net.shunt(i, j);
                let a = y.angle + d[i] - d[j];
                jac[(row, i)] = e[j] * y.magnitude * f(a) - two * e[i] * y.magnitude * f(y.angle)
                    + two * e[i] * ys.magnitude * f(ys.angle);
                jac[(row, j)] = e[i] * y.magnitude * f(a);
                let g = e[i] * e[j] * y.magnitude * df(a);
                put_angle(&mut jac, i, g);
                put_angle(&mut jac, j, -g);
            }
        }
    }
    jac
}

#[cfg(test)]
mod tests;
