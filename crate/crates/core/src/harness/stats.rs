use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::classify::{Outcome, Targets, TripletComponent};
use super::observables::Obs;
use super::run::{Ensemble, TrajectoryRecord};
use super::HarnessError;

/// Pointwise ensemble mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSeries {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub count: usize,
}

/// Mean and standard error over series of equal length `len`; shorter
/// series are skipped.
pub fn mean_series<'a>(series: impl IntoIterator<Item = &'a [f64]>, len: usize) -> MeanSeries {
    let mut sum = vec![0.0; len];
    let mut sq = vec![0.0; len];
    let mut count = 0usize;
    for s in series.into_iter().filter(|s| s.len() >= len) {
        for j in 0..len {
            sum[j] += s[j];
            sq[j] += s[j] * s[j];
        }
        count += 1;
    }
    let n = count as f64;
    let mean: Vec<f64> = sum.iter().map(|x| x / n).collect();
    let stderr = if count > 1 {
        sq.iter().zip(&mean).map(|(q, m)| ((q / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt()).collect()
    } else {
        vec![0.0; len]
    };
    MeanSeries { mean, stderr, count }
}

/// What a conditional mean averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    Entropy,
    Observable(Obs),
}

/// Pointwise mean of `quantity` over non-excluded records that ended at
/// `outcome`, optionally also requiring a given amplitude to vanish first.
pub fn conditional_mean(
    records: &[TrajectoryRecord],
    outcome: Outcome,
    quantity: Quantity,
    first_vanish: Option<TripletComponent>,
) -> Result<Vec<f64>, HarnessError> {
    let selected: Vec<Vec<f64>> = records
        .iter()
        .filter(|r| !r.is_excluded() && r.outcome == outcome)
        .filter(|r| first_vanish.is_none_or(|c| r.first_vanish.map(|(f, _)| f) == Some(c)))
        .map(|r| match quantity {
            Quantity::Entropy => r.entropy.clone(),
            Quantity::Observable(o) => r.series(o),
        })
        .filter(|s| !s.is_empty())
        .collect();
    let len = selected.iter().map(Vec::len).min().ok_or(HarnessError::EmptySelection)?;
    Ok(mean_series(selected.iter().map(|s| &s[..]), len).mean)
}

/// Fit window for asymptotic rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateWindow {
    /// Trailing fraction of the time span.
    pub fraction: f64,
    /// Earliest admissible time, e.g. when the collapse fraction settles.
    pub start_after: f64,
}

impl Default for RateWindow {
    fn default() -> Self {
        Self { fraction: 0.25, start_after: f64::NEG_INFINITY }
    }
}

/// Minimum number of points in a fit window.
pub const MIN_FIT_POINTS: usize = 10;

/// Least-squares line over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    /// Standard error of the slope from the fit residuals.
    pub stderr: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

fn window_range(times: &[f64], window: &RateWindow) -> Result<(usize, usize), HarnessError> {
    let n = times.len();
    if n == 0 {
        return Err(HarnessError::WindowTooShort(0));
    }
    let (t0, t1) = (times[0], times[n - 1]);
    let start = (t1 - window.fraction * (t1 - t0)).max(window.start_after);
    let eps = 1e-9 * (t1 - t0).abs().max(1.0);
    let first = times.iter().position(|&t| t >= start - eps).unwrap_or(n);
    if n - first < MIN_FIT_POINTS {
        return Err(HarnessError::WindowTooShort(n - first));
    }
    Ok((first, n))
}

fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let stderr = if x.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, stderr)
}

/// Least-squares slope of `series` over the trailing window.
pub fn asymptotic_rate(times: &[f64], series: &[f64], window: &RateWindow) -> Result<RateFit, HarnessError> {
    let n = times.len().min(series.len());
    let (first, last) = window_range(&times[..n], window)?;
    let (slope, stderr) = ols(&times[first..last], &series[first..last]);
    Ok(RateFit { slope, stderr, t_start: times[first], t_end: times[last - 1], points: last - first })
}

/// Fraction of `records` that are collapsed at each sample time and stay
/// collapsed at every later sample.
pub fn collapse_fraction<'a>(records: impl IntoIterator<Item = &'a TrajectoryRecord>, targets: &Targets, len: usize) -> Vec<f64> {
    let mut hits = vec![0usize; len];
    let mut n = 0usize;
    for r in records {
        n += 1;
        for (j, s) in r.states.iter().enumerate().take(len).rev() {
            if targets.classify(&crate::coherence::CoherenceState::new(*s)) == Outcome::Unresolved {
                break;
            }
            hits[j] += 1;
        }
    }
    hits.into_iter().map(|h| if n == 0 { 0.0 } else { h as f64 / n as f64 }).collect()
}

/// Earliest time from which `fraction` stays at or above `threshold`.
pub fn settled_time(times: &[f64], fraction: &[f64], threshold: f64) -> Option<f64> {
    let mut start = None;
    for j in (0..fraction.len().min(times.len())).rev() {
        if fraction[j] < threshold {
            break;
        }
        start = Some(times[j]);
    }
    start
}

/// Normalized histogram on a fixed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    pub total: usize,
}

/// Number of histogram bins on [−1, 1].
pub const HIST_BINS: usize = 101;

impl Histogram {
    pub fn new(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Self {
        let mut counts = vec![0usize; bins];
        let mut total = 0;
        for v in values {
            let f = ((v - lo) / (hi - lo) * bins as f64).floor();
            let k = (f.max(0.0) as usize).min(bins - 1);
            counts[k] += 1;
            total += 1;
        }
        Self { lo, hi, counts, total }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|k| self.lo + (k as f64 + 0.5) * self.width()).collect()
    }

    /// Probability density per bin; integrates to 1.
    pub fn density(&self) -> Vec<f64> {
        let norm = self.total.max(1) as f64 * self.width();
        self.counts.iter().map(|&c| c as f64 / norm).collect()
    }

    /// Probability mass of bins whose centre lies within `radius` of `x`.
    pub fn mass_near(&self, x: f64, radius: f64) -> f64 {
        let c: usize = self
            .centers()
            .iter()
            .zip(&self.counts)
            .filter(|(m, _)| (*m - x).abs() <= radius)
            .map(|(_, n)| n)
            .sum();
        c as f64 / self.total.max(1) as f64
    }
}

/// Histogram of the final value of `var` on [−1, 1] with 101 bins.
pub fn final_state_histogram(records: &[TrajectoryRecord], var: Obs) -> Histogram {
    Histogram::new(records.iter().map(|r| var.eval(&r.final_state().s)), -1.0, 1.0, HIST_BINS)
}

/// Every sampled (x, y) point of every record.
pub fn trajectory_scatter(records: &[TrajectoryRecord], x: Obs, y: Obs) -> Vec<(f64, f64)> {
    records.iter().flat_map(|r| r.states.iter().map(move |s| (x.eval(s), y.eval(s)))).collect()
}

/// Mean over trajectories of Δs_env(t_end)/t_end, where t_end is the last
/// sample before exclusion or the end of the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanRate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
    /// How many of the trajectories were excluded before the end.
    pub truncated: usize,
}

/// Average production rate per outcome over each trajectory's valid span,
/// including trajectories excluded later on.
pub fn outcome_span_rates(records: &[TrajectoryRecord], times: &[f64]) -> BTreeMap<Outcome, SpanRate> {
    let mut groups: BTreeMap<Outcome, (Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let j = r.entropy.len();
        if j < 2 || j > times.len() {
            continue;
        }
        let g = groups.entry(r.outcome).or_default();
        g.0.push(r.entropy[j - 1] / times[j - 1]);
        g.1 += r.is_excluded() as usize;
    }
    groups
        .into_iter()
        .map(|(o, (v, truncated))| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            (o, SpanRate { mean, stderr: (var / n).sqrt(), count: v.len(), truncated })
        })
        .collect()
}

/// Worst invariant residuals over an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSummary {
    pub steps: usize,
    pub positivity_failures: usize,
    pub min_eigenvalue: f64,
    pub max_trace_error: f64,
    pub max_hermitian_error: f64,
    pub max_singlet_constraint: Option<f64>,
    pub max_s2_deviation: Option<f64>,
    pub max_geometry_violation: f64,
}

fn opt_max(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl InvariantSummary {
    pub fn from_ensemble(ens: &Ensemble) -> Self {
        let steps = ens.config.integrator().steps() * ens.records.len();
        let mut out = Self {
            steps,
            positivity_failures: 0,
            min_eigenvalue: f64::INFINITY,
            max_trace_error: 0.0,
            max_hermitian_error: 0.0,
            max_singlet_constraint: None,
            max_s2_deviation: None,
            max_geometry_violation: 0.0,
        };
        for r in &ens.records {
            let i = &r.invariants;
            out.positivity_failures += i.positivity_failures;
            out.min_eigenvalue = out.min_eigenvalue.min(i.min_eigenvalue);
            out.max_trace_error = out.max_trace_error.max(i.max_trace_error);
            out.max_hermitian_error = out.max_hermitian_error.max(i.max_hermitian_error);
            out.max_singlet_constraint = opt_max(out.max_singlet_constraint, i.max_singlet_constraint);
            out.max_s2_deviation = opt_max(out.max_s2_deviation, i.max_s2_deviation);
            out.max_geometry_violation = out.max_geometry_violation.max(i.max_geometry_violation);
        }
        out
    }
}

/// Summary statistics of one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub n_traj: usize,
    pub n_excluded: usize,
    pub exclusion_fraction: f64,
    /// Exclusions grouped by reason.
    pub exclusion_reasons: BTreeMap<String, usize>,
    pub outcome_counts: BTreeMap<Outcome, usize>,
    pub mean_entropy: Option<MeanSeries>,
    pub collapse_fraction: Vec<f64>,
    /// Earliest time from which at least 90% of included trajectories
    /// are collapsed.
    pub collapse_settled: Option<f64>,
    /// Fit over the trailing 25%, starting no earlier than
    /// `collapse_settled`.
    pub rate: Option<RateFit>,
    pub rate_error: Option<String>,
    /// Fit over the trailing 25% regardless of the collapse fraction.
    pub rate_trailing: Option<RateFit>,
    /// Standard error of the rate from the spread of per-trajectory slopes.
    pub rate_ensemble_stderr: Option<f64>,
    /// Rates over trailing windows of 15%, 25% and 40%.
    pub window_sensitivity: Vec<(f64, f64)>,
    pub outcome_rates: BTreeMap<Outcome, f64>,
    pub outcome_span_rates: BTreeMap<Outcome, SpanRate>,
    pub histogram_s3: Histogram,
    pub histogram_s12: Histogram,
    pub invariants: InvariantSummary,
}

/// Required collapsed fraction before the rate window may start.
pub const COLLAPSE_FRACTION: f64 = 0.9;

impl EnsembleStats {
    pub fn from_ensemble(ens: &Ensemble) -> Self {
        let cfg = &ens.config;
        let len = ens.times.len();
        let targets = Targets::new(&cfg.targets(), cfg.collapse);
        let has_entropy = ens.entropy_unavailable.is_none();

        let mut outcome_counts = BTreeMap::new();
        for r in &ens.records {
            *outcome_counts.entry(r.outcome).or_insert(0) += 1;
        }
        let mut exclusion_reasons = BTreeMap::new();
        for r in &ens.records {
            if let Some(e) = &r.excluded {
                let key = e.reason.split(" (").next().unwrap_or(&e.reason).to_string();
                *exclusion_reasons.entry(key).or_insert(0) += 1;
            }
        }
        let n_excluded = ens.n_excluded();

        let included: Vec<&TrajectoryRecord> = ens.included().collect();
        let collapse_fraction = collapse_fraction(included.iter().copied(), &targets, len);
        let collapse_settled = settled_time(&ens.times, &collapse_fraction, COLLAPSE_FRACTION);

        let mut mean_entropy = None;
        let mut rate = None;
        let mut rate_error = None;
        let mut rate_trailing = None;
        let mut rate_ensemble_stderr = None;
        let mut window_sensitivity = Vec::new();
        let mut outcome_rates = BTreeMap::new();
        if has_entropy && included.is_empty() {
            rate_error = Some(HarnessError::EmptySelection.to_string());
        } else if has_entropy {
            let m = mean_series(included.iter().map(|r| &r.entropy[..]), len);
            let window =
                RateWindow { start_after: collapse_settled.unwrap_or(f64::INFINITY), ..RateWindow::default() };
            match asymptotic_rate(&ens.times, &m.mean, &window) {
                Ok(fit) => {
                    let slopes: Vec<f64> = included
                        .iter()
                        .filter_map(|r| asymptotic_rate(&ens.times, &r.entropy, &window).ok().map(|f| f.slope))
                        .collect();
                    if slopes.len() > 1 {
                        let n = slopes.len() as f64;
                        let mu = slopes.iter().sum::<f64>() / n;
                        let var = slopes.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / (n - 1.0);
                        rate_ensemble_stderr = Some((var / n).sqrt());
                    }
                    rate = Some(fit);
                }
                Err(e) => rate_error = Some(e.to_string()),
            }
            rate_trailing = asymptotic_rate(&ens.times, &m.mean, &RateWindow::default()).ok();
            for fraction in [0.15, 0.25, 0.4] {
                let w = RateWindow { fraction, ..RateWindow::default() };
                if let Ok(f) = asymptotic_rate(&ens.times, &m.mean, &w) {
                    window_sensitivity.push((fraction, f.slope));
                }
            }
            for o in targets.outcomes() {
                if let Ok(series) = conditional_mean(&ens.records, o, Quantity::Entropy, None) {
                    if let Ok(f) = asymptotic_rate(&ens.times, &series, &RateWindow::default()) {
                        outcome_rates.insert(o, f.slope);
                    }
                }
            }
            mean_entropy = Some(m);
        }

        Self {
            times: ens.times.clone(),
            n_traj: ens.records.len(),
            n_excluded,
            exclusion_fraction: n_excluded as f64 / ens.records.len().max(1) as f64,
            exclusion_reasons,
            outcome_counts,
            mean_entropy,
            collapse_fraction,
            collapse_settled,
            rate,
            rate_error,
            rate_trailing,
            rate_ensemble_stderr,
            window_sensitivity,
            outcome_rates,
            outcome_span_rates: if has_entropy { outcome_span_rates(&ens.records, &ens.times) } else { BTreeMap::new() },
            histogram_s3: final_state_histogram(&ens.records, Obs::S3),
            histogram_s12: final_state_histogram(&ens.records, Obs::S12),
            invariants: InvariantSummary::from_ensemble(ens),
        }
    }

    pub fn count(&self, o: Outcome) -> usize {
        self.outcome_counts.get(&o).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_series_slope() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|x| 8.0 * x + 1.0).collect();
        let f = asymptotic_rate(&t, &y, &RateWindow::default()).unwrap();
        assert!((f.slope - 8.0).abs() < 1e-12);
        assert_eq!(f.points, 25);
    }

    #[test]
    fn short_window_is_rejected() {
        let t: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(matches!(asymptotic_rate(&t, &t, &RateWindow::default()), Err(HarnessError::WindowTooShort(5))));
    }

    #[test]
    fn histogram_single_bin() {
        let h = Histogram::new([1.0, 1.0, 1.0], -1.0, 1.0, HIST_BINS);
        assert_eq!(h.counts[HIST_BINS - 1], 3);
        assert_eq!(h.mass_near(1.0, 0.01), 1.0);
        let integral: f64 = h.density().iter().sum::<f64>() * h.width();
        assert!((integral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn settled_time_requires_staying_above() {
        let t = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(settled_time(&t, &[0.0, 0.95, 0.8, 0.92], 0.9), Some(3.0));
        assert_eq!(settled_time(&t, &[0.0, 0.95, 0.91, 0.92], 0.9), Some(1.0));
        assert_eq!(settled_time(&t, &[0.0, 0.5, 0.5, 0.5], 0.9), None);
    }
}
