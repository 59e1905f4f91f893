use std::fmt::Write;

/// Header of the per-trial CSV.
pub const TRIAL_HEADER: &str = "experiment,seed,trial,n,m,sigma,rho,lambda,error,converged,iterations";
/// Header of the summary CSV.
pub const SUMMARY_HEADER: &str = "experiment,seed,sweep_var,sweep_value,lambda_star,mean_error";

/// One solve: a trial at one sweep point and one `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub experiment: String,
    pub seed: u64,
    pub trial: usize,
    /// Number of measurements.
    pub n: usize,
    /// State dimension.
    pub m: usize,
    pub sigma: f64,
    /// Fraction of measurements carrying bad data.
    pub rho: f64,
    pub lambda: f64,
    /// `‖x* − x̂‖₂`; NaN when the solver failed outright.
    pub error: f64,
    pub converged: bool,
    /// Primal-dual iterations (linear) or outer iterations (nonlinear).
    pub iterations: usize,
    /// Index of the sweep point this row belongs to.
    pub point: usize,
}

impl TrialRecord {
    /// Rows that enter averages.
    pub fn usable(&self) -> bool {
        self.converged && self.error.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub seed: u64,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub lambda_star: f64,
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

pub fn trials_to_csv(records: &[TrialRecord]) -> String {
    let mut out = format!("{TRIAL_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment, r.seed, r.trial, r.n, r.m, r.sigma, r.rho, r.lambda, r.error, r.converged, r.iterations
        );
    }
    out
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.experiment, r.seed, r.sweep_var, r.sweep_value, r.lambda_star, r.mean_error
        );
    }
    out
}

/// Errors within this relative margin of the smallest count as ties.
const TIE_REL: f64 = 1e-6;
/// Absolute tie margin, for exact recoveries that differ only by rounding.
const TIE_ABS: f64 = 1e-9;

/// The grid value with the smallest error, `(λ*, error)`. Ties go to the larger
/// `λ`. `None` if no pair has a finite error.
pub fn lambda_star(pairs: &[(f64, f64)]) -> Option<(f64, f64)> {
    let best = pairs.iter().map(|p| p.1).filter(|e| e.is_finite()).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let margin = best * TIE_REL + TIE_ABS;
    pairs
        .iter()
        .filter(|p| p.1.is_finite() && p.1 <= best + margin)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|&(l, _)| (l, best))
}

// usable rows grouped by (point, trial), in record order
fn per_run(records: &[TrialRecord], point: usize) -> Vec<Vec<(f64, f64)>> {
    let mut runs: Vec<(usize, Vec<(f64, f64)>)> = Vec::new();
    for r in records.iter().filter(|r| r.point == point) {
        match runs.iter_mut().find(|(t, _)| *t == r.trial) {
            Some((_, v)) => v.push((r.lambda, if r.usable() { r.error } else { f64::NAN })),
            None => runs.push((r.trial, vec![(r.lambda, if r.usable() { r.error } else { f64::NAN })])),
        }
    }
    runs.into_iter().map(|(_, v)| v).collect()
}

/// Per sweep point: `λ*` of every run (over that run's usable rows), averaged
/// over runs, with the mean of the runs' smallest errors.
pub fn summarize_per_run(records: &[TrialRecord], sweep_var: &str, points: &[f64]) -> Vec<SummaryRow> {
    let Some(first) = records.first() else { return Vec::new() };
    points
        .iter()
        .enumerate()
        .map(|(k, &value)| {
            let stars: Vec<(f64, f64)> = per_run(records, k).iter().filter_map(|v| lambda_star(v)).collect();
            let count = stars.len() as f64;
            let (lambda_star, mean_error) = if stars.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                (stars.iter().map(|s| s.0).sum::<f64>() / count, stars.iter().map(|s| s.1).sum::<f64>() / count)
            };
            SummaryRow {
                experiment: first.experiment.clone(),
                seed: first.seed,
                sweep_var: sweep_var.into(),
                sweep_value: value,
                lambda_star,
                mean_error,
            }
        })
        .collect()
}

/// Mean error over usable runs for one `(sweep point, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanError {
    pub point: usize,
    pub lambda: f64,
    pub mean_error: f64,
    /// Runs that entered the mean.
    pub runs: usize,
    /// Runs left out (failed or not converged).
    pub excluded: usize,
}

pub fn mean_error_table(records: &[TrialRecord]) -> Vec<MeanError> {
    let mut table: Vec<MeanError> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    for r in records {
        let k = match table.iter().position(|e| e.point == r.point && e.lambda == r.lambda) {
            Some(k) => k,
            None => {
                table.push(MeanError { point: r.point, lambda: r.lambda, mean_error: f64::NAN, runs: 0, excluded: 0 });
                sums.push(0.0);
                table.len() - 1
            }
        };
        if r.usable() {
            table[k].runs += 1;
            sums[k] += r.error;
        } else {
            table[k].excluded += 1;
        }
    }
    for (e, s) in table.iter_mut().zip(sums) {
        if e.runs > 0 {
            e.mean_error = s / e.runs as f64;
        }
    }
    table
}

/// Per sweep point: the `λ` with the smallest mean error over runs.
pub fn summarize_best_lambda(records: &[TrialRecord], sweep_var: &str, points: &[f64]) -> Vec<SummaryRow> {
    let Some(first) = records.first() else { return Vec::new() };
    let table = mean_error_table(records);
    points
        .iter()
        .enumerate()
        .map(|(k, &value)| {
            let pairs: Vec<(f64, f64)> = table.iter().filter(|e| e.point == k).map(|e| (e.lambda, e.mean_error)).collect();
            let (lambda_star, mean_error) = lambda_star(&pairs).unwrap_or((f64::NAN, f64::NAN));
            SummaryRow {
                experiment: first.experiment.clone(),
                seed: first.seed,
                sweep_var: sweep_var.into(),
                sweep_value: value,
                lambda_star,
                mean_error,
            }
        })
        .collect()
}
