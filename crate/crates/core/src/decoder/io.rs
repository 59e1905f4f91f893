//! CSV problem and solution files.
//!
//! A problem file starts with `# n,m,mode,param` (mode is `constrained` or
//! `lagrangian`), followed by `n` rows `H_i1,…,H_im,y_i`. Blank lines and
//! further `#` lines are ignored. A solution is written as two CSV sections,
//! `index,x_hat` and `index,z_hat`.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Real;

use super::{DecodeError, DecodeProblem, DecodeSolution, Mode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemFileError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Invalid(#[from] DecodeError),
}

fn parse_err(line: usize, reason: impl Into<String>) -> ProblemFileError {
    ProblemFileError::Parse { line, reason: reason.into() }
}

/// Header values of a problem file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemHeader<T> {
    pub n: usize,
    pub m: usize,
    pub mode: Mode<T>,
}

pub fn parse_problem<T: Real + FromStr>(text: &str) -> Result<DecodeProblem<T>, ProblemFileError> {
    let mut header: Option<ProblemHeader<T>> = None;
    let mut h_data = Vec::new();
    let mut y = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if header.is_none() {
                header = Some(parse_header(rest, line_no)?);
            }
            continue;
        }
        let hd = header.ok_or_else(|| parse_err(line_no, "data before `# n,m,mode,param` header"))?;
        let fields = line.split(',').map(str::trim).collect::<Vec<_>>();
        if fields.len() != hd.m + 1 {
            return Err(parse_err(line_no, format!("expected {} columns, found {}", hd.m + 1, fields.len())));
        }
        for (col, f) in fields.iter().enumerate() {
            let v: T = f.parse().map_err(|_| parse_err(line_no, format!("column {}: `{f}` is not a number", col + 1)))?;
            if col < hd.m {
                h_data.push(v);
            } else {
                y.push(v);
            }
        }
    }
    let hd = header.ok_or_else(|| parse_err(1, "missing `# n,m,mode,param` header"))?;
    if y.len() != hd.n {
        return Err(parse_err(text.lines().count(), format!("header declares n={} rows, found {}", hd.n, y.len())));
    }
    let h = Matrix::from_row_major(hd.n, hd.m, h_data);
    Ok(DecodeProblem::new(y, h, hd.mode)?)
}

fn parse_header<T: Real + FromStr>(rest: &str, line: usize) -> Result<ProblemHeader<T>, ProblemFileError> {
    let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(parse_err(line, "header must be `# n,m,mode,param`"));
    }
    let n: usize = parts[0].parse().map_err(|_| parse_err(line, "n is not an integer"))?;
    let m: usize = parts[1].parse().map_err(|_| parse_err(line, "m is not an integer"))?;
    let param: T = parts[3].parse().map_err(|_| parse_err(line, "param is not a number"))?;
    let mode = match parts[2] {
        "constrained" | "epsilon" => Mode::Constrained { epsilon: param },
        "lagrangian" | "lambda" => Mode::Lagrangian { lambda: param },
        other => return Err(parse_err(line, format!("unknown mode `{other}`"))),
    };
    Ok(ProblemHeader { n, m, mode })
}

pub fn write_problem<T: Real>(problem: &DecodeProblem<T>) -> String {
    let mut out = String::new();
    let mode = problem.mode();
    let _ = writeln!(out, "# {},{},{},{}", problem.n(), problem.m(), mode.name(), mode.param());
    for i in 0..problem.n() {
        for v in problem.h().row(i) {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", problem.y()[i]);
    }
    out
}

pub fn write_solution<T: Real>(solution: &DecodeSolution<T>) -> String {
    let mut out = String::from("index,x_hat\n");
    for (i, v) in solution.x_hat.iter().enumerate() {
        let _ = writeln!(out, "{i},{v}");
    }
    out.push_str("index,z_hat\n");
    for (i, v) in solution.z_hat.iter().enumerate() {
        let _ = writeln!(out, "{i},{v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# 4,1,lagrangian,10\n1,5\n1,5\n1,15\n1,4.5\n";

    #[test]
    fn parses_sample() {
        let p: DecodeProblem<f64> = parse_problem(SAMPLE).unwrap();
        assert_eq!((p.n(), p.m()), (4, 1));
        assert_eq!(p.y(), &[5.0, 5.0, 15.0, 4.5]);
        assert_eq!(p.mode(), Mode::Lagrangian { lambda: 10.0 });
    }

    #[test]
    fn round_trip_is_stable() {
        let p: DecodeProblem<f64> = parse_problem(SAMPLE).unwrap();
        let text = write_problem(&p);
        let q: DecodeProblem<f64> = parse_problem(&text).unwrap();
        assert_eq!(write_problem(&q), text);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "# 2,1,lagrangian,1\n1,2\n1,x\n";
        match parse_problem::<f64>(bad) {
            Err(ProblemFileError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_problem::<f64>("1,2\n"), Err(ProblemFileError::Parse { line: 1, .. })));
        assert!(matches!(
            parse_problem::<f64>("# 2,1,median,1\n1,2\n1,3\n"),
            Err(ProblemFileError::Parse { .. })
        ));
        assert!(matches!(
            parse_problem::<f64>("# 3,1,lagrangian,1\n1,2\n1,3\n"),
            Err(ProblemFileError::Parse { .. })
        ));
    }

    #[test]
    fn rank_deficiency_surfaces() {
        let text = "# 3,2,constrained,0.5\n1,2,1\n2,4,1\n3,6,1\n";
        assert!(matches!(
            parse_problem::<f64>(text),
            Err(ProblemFileError::Invalid(DecodeError::RankDeficient { .. }))
        ));
    }
}
