//! Sectioned text format for networks and measurement plans.
//!
//! ```text
//! [BUS]
//! 1 ref
//! 2
//! [LINE]
//! # i j Y theta Ysi_i theta_si_i Ysi_j theta_si_j
//! 1 2 15.81 1.89 0.03 1.5708 0.03 1.5708
//! [DIAG]
//! # i Y_ii theta_ii   (optional, default 0)
//! 1 20.84 -1.26
//! [MEAS]
//! PI 1
//! PF 1 2
//! ```
//!
//! Bus ids are arbitrary nonnegative integers. At most one bus carries `ref`;
//! without it the first listed bus is the reference. `#` starts a comment.
//! The canonical form written by [`serialize_case`] lists buses, lines (with
//! `i < j`) and diagonal entries sorted by id and keeps the measurement order.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::scalar::Real;

use super::{Admittance, CaseError, Line, Measurement, MeasurementPlan, PowerNetwork, StateVector};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Bus,
    Line,
    Diag,
    Meas,
}

fn parse_err(line: usize, reason: impl Into<String>) -> CaseError {
    CaseError::Parse { line, reason: reason.into() }
}

fn num<T: FromStr>(tok: &str, line: usize) -> Result<T, CaseError> {
    tok.parse().map_err(|_| parse_err(line, format!("`{tok}` is not a number")))
}

pub fn parse_case<T: Real + FromStr>(text: &str) -> Result<(PowerNetwork<T>, MeasurementPlan), CaseError> {
    let mut section = None;
    let mut buses: Vec<(u32, bool)> = Vec::new();
    let mut lines: Vec<(usize, u32, u32, [T; 6])> = Vec::new();
    let mut diags: Vec<(usize, u32, T, T)> = Vec::new();
    let mut meas: Vec<(usize, &str, u32, Option<u32>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            section = Some(match content.to_ascii_uppercase().as_str() {
                "[BUS]" => Section::Bus,
                "[LINE]" => Section::Line,
                "[DIAG]" => Section::Diag,
                "[MEAS]" => Section::Meas,
                other => return Err(parse_err(ln, format!("unknown section {other}"))),
            });
            continue;
        }
        let tok: Vec<&str> = content.split_whitespace().collect();
        match section {
            None => return Err(parse_err(ln, "entry before any section header")),
            Some(Section::Bus) => {
                let flagged = match tok.as_slice() {
                    [_] => false,
                    [_, flag] if flag.eq_ignore_ascii_case("ref") => true,
                    _ => return Err(parse_err(ln, "expected `id` or `id ref`")),
                };
                buses.push((num(tok[0], ln)?, flagged));
            }
            Some(Section::Line) => {
                if tok.len() != 8 {
                    return Err(parse_err(ln, format!("expected 8 fields, found {}", tok.len())));
                }
                let mut v = [T::zero(); 6];
                for (k, t) in tok[2..].iter().enumerate() {
                    v[k] = num(t, ln)?;
                }
                lines.push((ln, num(tok[0], ln)?, num(tok[1], ln)?, v));
            }
            Some(Section::Diag) => {
                if tok.len() != 3 {
                    return Err(parse_err(ln, format!("expected 3 fields, found {}", tok.len())));
                }
                diags.push((ln, num(tok[0], ln)?, num(tok[1], ln)?, num(tok[2], ln)?));
            }
            Some(Section::Meas) => {
                let kind = tok[0];
                let arity = match kind.to_ascii_uppercase().as_str() {
                    "PI" | "QI" => 1,
                    "PF" | "QF" => 2,
                    _ => return Err(parse_err(ln, format!("unknown measurement `{kind}`"))),
                };
                if tok.len() != arity + 1 {
                    return Err(parse_err(ln, format!("`{kind}` takes {arity} bus id(s)")));
                }
                let second = if arity == 2 { Some(num(tok[2], ln)?) } else { None };
                meas.push((ln, kind, num(tok[1], ln)?, second));
            }
        }
    }

    if buses.is_empty() {
        return Err(CaseError::Validation("no [BUS] entries".into()));
    }
    let refs: Vec<u32> = buses.iter().filter(|b| b.1).map(|b| b.0).collect();
    if refs.len() > 1 {
        return Err(CaseError::Validation("more than one bus flagged `ref`".into()));
    }
    let ref_id = refs.first().copied().unwrap_or(buses[0].0);
    let mut ids: Vec<u32> = buses.iter().map(|b| b.0).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(CaseError::Validation("duplicate bus id".into()));
    }
    let index = |id: u32, ln: usize| {
        ids.binary_search(&id)
            .map_err(|_| CaseError::Validation(format!("line {ln}: unknown bus {id}")))
    };

    let mut net_lines = Vec::with_capacity(lines.len());
    for (ln, a, b, v) in lines {
        let (i, j) = (index(a, ln)?, index(b, ln)?);
        let mut line = Line {
            from: i,
            to: j,
            admittance: Admittance::new(v[0], v[1]),
            shunt_from: Admittance::new(v[2], v[3]),
            shunt_to: Admittance::new(v[4], v[5]),
        };
        if i > j {
            line = Line { from: j, to: i, shunt_from: line.shunt_to, shunt_to: line.shunt_from, ..line };
        }
        net_lines.push(line);
    }
    net_lines.sort_by_key(|l| (l.from, l.to));

    let mut diagonal = vec![Admittance::zero(); ids.len()];
    let mut seen = vec![false; ids.len()];
    for (ln, id, y, th) in diags {
        let i = index(id, ln)?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(CaseError::Validation(format!("line {ln}: second [DIAG] entry for bus {id}")));
        }
        diagonal[i] = Admittance::new(y, th);
    }

    let reference = index(ref_id, 0)?;
    let net = PowerNetwork::new(ids.clone(), reference, net_lines, diagonal)?;

    let mut entries = Vec::with_capacity(meas.len());
    for (ln, kind, a, b) in meas {
        let i = index(a, ln)?;
        let e = match (kind.to_ascii_uppercase().as_str(), b) {
            ("PI", _) => Measurement::PInjection(i),
            ("QI", _) => Measurement::QInjection(i),
            ("PF", Some(b)) => Measurement::PFlow(i, index(b, ln)?),
            (_, Some(b)) => Measurement::QFlow(i, index(b, ln)?),
            _ => unreachable!("arity checked while reading"),
        };
        entries.push(e);
    }
    let plan = MeasurementPlan::new(&net, entries)?;
    Ok((net, plan))
}

/// Canonical text form of a network and plan.
pub fn serialize_case<T: Real>(net: &PowerNetwork<T>, plan: &MeasurementPlan) -> String {
    let ids = net.bus_ids();
    let mut order: Vec<usize> = (0..net.bus_count()).collect();
    order.sort_by_key(|&i| ids[i]);

    let mut out = String::from("[BUS]\n");
    for &i in &order {
        let flag = if i == net.reference_bus() { " ref" } else { "" };
        let _ = writeln!(out, "{}{flag}", ids[i]);
    }

    out.push_str("[LINE]\n");
    let mut lines: Vec<Line<T>> = net
        .lines()
        .iter()
        .map(|l| {
            if ids[l.from] > ids[l.to] {
                Line { from: l.to, to: l.from, shunt_from: l.shunt_to, shunt_to: l.shunt_from, ..*l }
            } else {
                *l
            }
        })
        .collect();
    lines.sort_by_key(|l| (ids[l.from], ids[l.to]));
    for l in &lines {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            ids[l.from],
            ids[l.to],
            l.admittance.magnitude,
            l.admittance.angle,
            l.shunt_from.magnitude,
            l.shunt_from.angle,
            l.shunt_to.magnitude,
            l.shunt_to.angle
        );
    }

    out.push_str("[DIAG]\n");
    for &i in &order {
        let d = net.diagonal(i);
        if d.magnitude != T::zero() || d.angle != T::zero() {
            let _ = writeln!(out, "{} {} {}", ids[i], d.magnitude, d.angle);
        }
    }

    out.push_str("[MEAS]\n");
    for e in plan.entries() {
        let _ = writeln!(out, "{}", measurement_label(net, *e));
    }
    out
}

/// Reads a state CSV with header `bus,magnitude,angle` and one row per bus.
/// The reference bus angle must be 0.
pub fn parse_state<T: Real + FromStr>(net: &PowerNetwork<T>, text: &str) -> Result<StateVector<T>, CaseError> {
    let k = net.bus_count();
    let mut mags = vec![None; k];
    let mut angles = vec![T::zero(); k];
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if !header_seen {
            header_seen = true;
            if f.first().is_some_and(|s| s.eq_ignore_ascii_case("bus")) {
                continue;
            }
        }
        if f.len() != 3 {
            return Err(parse_err(ln, format!("expected `bus,magnitude,angle`, found {} fields", f.len())));
        }
        let id: u32 = num(f[0], ln)?;
        let i = net.bus_index(id).ok_or_else(|| CaseError::Validation(format!("line {ln}: unknown bus {id}")))?;
        if mags[i].is_some() {
            return Err(CaseError::Validation(format!("line {ln}: bus {id} listed twice")));
        }
        let e: T = num(f[1], ln)?;
        if !(e > T::zero()) || !e.is_finite() {
            return Err(CaseError::Validation(format!("line {ln}: magnitude must be positive")));
        }
        mags[i] = Some(e);
        angles[i] = num(f[2], ln)?;
    }
    let magnitudes = mags
        .into_iter()
        .enumerate()
        .map(|(i, m)| m.ok_or_else(|| CaseError::Validation(format!("bus {} missing from state", net.bus_ids()[i]))))
        .collect::<Result<Vec<T>, _>>()?;
    let r = net.reference_bus();
    if angles[r] != T::zero() {
        return Err(CaseError::Validation(format!("reference bus {} must have angle 0", net.bus_ids()[r])));
    }
    angles.remove(r);
    Ok(StateVector { magnitudes, angles, reference_bus: r })
}

pub fn write_state<T: Real>(net: &PowerNetwork<T>, x: &StateVector<T>) -> String {
    let mut out = String::from("bus,magnitude,angle\n");
    let d = x.full_angles();
    for (i, id) in net.bus_ids().iter().enumerate() {
        let _ = writeln!(out, "{id},{},{}", x.magnitudes[i], d[i]);
    }
    out
}

/// Text form of one measurement as in a `[MEAS]` line, e.g. `PF 1 2`.
pub fn measurement_label<T: Real>(net: &PowerNetwork<T>, e: Measurement) -> String {
    let ids = net.bus_ids();
    match e {
        Measurement::PInjection(i) => format!("PI {}", ids[i]),
        Measurement::QInjection(i) => format!("QI {}", ids[i]),
        Measurement::PFlow(i, j) => format!("PF {} {}", ids[i], ids[j]),
        Measurement::QFlow(i, j) => format!("QF {} {}", ids[i], ids[j]),
    }
}

/// Parses a measurement label such as `QI 30` against the network's bus ids.
pub fn parse_measurement<T: Real>(net: &PowerNetwork<T>, label: &str) -> Result<Measurement, CaseError> {
    let tok: Vec<&str> = label.split_whitespace().collect();
    let bus = |t: &str| -> Result<usize, CaseError> {
        let id: u32 = t.parse().map_err(|_| CaseError::Validation(format!("`{t}` is not a bus id")))?;
        net.bus_index(id).ok_or_else(|| CaseError::Validation(format!("unknown bus {id}")))
    };
    let kind = tok.first().map(|k| k.to_ascii_uppercase()).unwrap_or_default();
    match (kind.as_str(), tok.len()) {
        ("PI", 2) => Ok(Measurement::PInjection(bus(tok[1])?)),
        ("QI", 2) => Ok(Measurement::QInjection(bus(tok[1])?)),
        ("PF", 3) => Ok(Measurement::PFlow(bus(tok[1])?, bus(tok[2])?)),
        ("QF", 3) => Ok(Measurement::QFlow(bus(tok[1])?, bus(tok[2])?)),
        _ => Err(CaseError::Validation(format!("`{label}` is not a measurement"))),
    }
}

/// Reads measured values from a CSV with header `measurement,value`, one row per
/// plan entry in any order (`PI 2,0.31`). Returns them in plan order.
pub fn parse_measurements<T: Real + FromStr>(net: &PowerNetwork<T>, plan: &MeasurementPlan, text: &str) -> Result<Vec<T>, CaseError> {
    let mut values: Vec<Option<T>> = vec![None; plan.len()];
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if !header_seen {
            header_seen = true;
            if f.first().is_some_and(|s| s.eq_ignore_ascii_case("measurement")) {
                continue;
            }
        }
        if f.len() != 2 {
            return Err(parse_err(ln, format!("expected `measurement,value`, found {} fields", f.len())));
        }
        let e = parse_measurement(net, f[0]).map_err(|err| parse_err(ln, err.to_string()))?;
        let k = plan
            .position(e)
            .ok_or_else(|| CaseError::Validation(format!("line {ln}: `{}` is not in the plan", f[0])))?;
        if values[k].is_some() {
            return Err(CaseError::Validation(format!("line {ln}: `{}` listed twice", f[0])));
        }
        let v: T = num(f[1], ln)?;
        if !v.is_finite() {
            return Err(parse_err(ln, "value must be finite"));
        }
        values[k] = Some(v);
    }
    values
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            v.ok_or_else(|| {
                CaseError::Validation(format!("no value for `{}`", measurement_label(net, plan.entries()[k])))
            })
        })
        .collect()
}

/// Writes values in plan order as `measurement,value` rows.
pub fn write_measurements<T: Real>(net: &PowerNetwork<T>, plan: &MeasurementPlan, values: &[T]) -> String {
    let mut out = String::from("measurement,value\n");
    for (e, v) in plan.entries().iter().zip(values) {
        let _ = writeln!(out, "{},{v}", measurement_label(net, *e));
    }
    out
}
