use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::classify::{Outcome, TripletComponent};
use super::config::CaseConfig;
use super::observables::Obs;
use super::run::Ensemble;
use super::stats::{conditional_mean, mean_series, trajectory_scatter, EnsembleStats, Quantity};
use super::HarnessError;

/// Formats a float with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header and rows of floats. The first column is the time (or
/// bin coordinate) column.
pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| fmt_float(*x)))?;
    }
    w.flush()?;
    Ok(())
}

fn columns_to_rows(times: &[f64], columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..times.len())
        .map(|j| {
            let mut row = vec![times[j]];
            row.extend(columns.iter().map(|c| c.get(j).copied().unwrap_or(f64::NAN)));
            row
        })
        .collect()
}

fn header(first: &str, rest: impl IntoIterator<Item = String>) -> Vec<String> {
    std::iter::once(first.to_string()).chain(rest).collect()
}

/// Observables averaged over the whole ensemble for a case.
pub fn observables_for(config: &CaseConfig) -> Vec<Obs> {
    let mut v = vec![Obs::Sz, Obs::Sx, Obs::Sz1, Obs::Sx2, Obs::Purity, Obs::SSquared];
    if config.case.is_total_sz() {
        v.extend([Obs::AmpUp, Obs::AmpZero, Obs::AmpDown]);
    } else {
        v.extend((0..4).map(Obs::ZxAmp));
    }
    v
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: CaseConfig,
    /// True once every trajectory finished and every file was written.
    pub complete: bool,
    pub meets_reference: bool,
    pub n_traj: usize,
    pub n_excluded: usize,
    pub exclusion_fraction: f64,
    pub exclusion_reasons: BTreeMap<String, usize>,
    pub entropy_unavailable: Option<String>,
    pub outcome_counts: BTreeMap<Outcome, usize>,
    pub rate: Option<super::stats::RateFit>,
    pub rate_error: Option<String>,
    pub rate_trailing: Option<super::stats::RateFit>,
    pub rate_ensemble_stderr: Option<f64>,
    pub window_sensitivity: Vec<(f64, f64)>,
    pub outcome_rates: BTreeMap<Outcome, f64>,
    pub outcome_span_rates: BTreeMap<Outcome, super::stats::SpanRate>,
    pub collapse_settled: Option<f64>,
    pub invariants: super::stats::InvariantSummary,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), HarnessError> {
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(m)?)?;
    Ok(())
}

/// Writes every dataset of a run into `dir` and returns the manifest.
/// An incomplete manifest is written first and replaced at the end, so an
/// interrupted write is always flagged.
pub fn emit_run(dir: &Path, ens: &Ensemble, stats: &EnsembleStats) -> Result<Manifest, HarnessError> {
    fs::create_dir_all(dir)?;
    let cfg = &ens.config;
    let mut manifest = Manifest {
        config: cfg.clone(),
        complete: false,
        meets_reference: cfg.meets_reference(),
        n_traj: stats.n_traj,
        n_excluded: stats.n_excluded,
        exclusion_fraction: stats.exclusion_fraction,
        exclusion_reasons: stats.exclusion_reasons.clone(),
        entropy_unavailable: ens.entropy_unavailable.clone(),
        outcome_counts: stats.outcome_counts.clone(),
        rate: stats.rate,
        rate_error: stats.rate_error.clone(),
        rate_trailing: stats.rate_trailing,
        rate_ensemble_stderr: stats.rate_ensemble_stderr,
        window_sensitivity: stats.window_sensitivity.clone(),
        outcome_rates: stats.outcome_rates.clone(),
        outcome_span_rates: stats.outcome_span_rates.clone(),
        collapse_settled: stats.collapse_settled,
        invariants: stats.invariants,
        files: Vec::new(),
    };
    write_manifest(dir, &manifest)?;
    let times = &ens.times;
    let mut files = Vec::new();
    let mut put = |name: &str, header: Vec<String>, rows: Vec<Vec<f64>>| -> Result<(), HarnessError> {
        write_csv(&dir.join(name), &header, rows)?;
        files.push(name.to_string());
        Ok(())
    };

    if let Some(m) = &stats.mean_entropy {
        let count = vec![m.count as f64; times.len()];
        put(
            "mean_entropy.csv",
            header("t", ["mean".into(), "stderr".into(), "n".into()]),
            columns_to_rows(times, &[m.mean.clone(), m.stderr.clone(), count]),
        )?;
        let mut names = Vec::new();
        let mut cols = Vec::new();
        for o in cfg.targets() {
            if let Ok(c) = conditional_mean(&ens.records, o, Quantity::Entropy, None) {
                names.push(format!("{o:?}"));
                cols.push(c);
            }
        }
        put("outcome_entropy.csv", header("t", names), columns_to_rows(times, &cols))?;
    }

    let obs = observables_for(cfg);
    let cols: Vec<Vec<f64>> = obs
        .iter()
        .map(|o| {
            let series: Vec<Vec<f64>> = ens.records.iter().map(|r| r.series(*o)).collect();
            mean_series(series.iter().map(|s| &s[..]), times.len()).mean
        })
        .collect();
    put("observables.csv", header("t", obs.iter().map(Obs::name)), columns_to_rows(times, &cols))?;

    if cfg.case.is_total_sz() {
        let amps = [Obs::AmpUp, Obs::AmpZero, Obs::AmpDown];
        let mut names = Vec::new();
        let mut cols = Vec::new();
        for o in cfg.targets() {
            for (tag, fv) in [("", None), ("|up_up_first", Some(TripletComponent::Up))] {
                for a in amps {
                    if let Ok(c) = conditional_mean(&ens.records, o, Quantity::Observable(a), fv) {
                        names.push(format!("{o:?}{tag}:{}", a.name()));
                        cols.push(c);
                    }
                }
            }
        }
        put("outcome_amplitudes.csv", header("t", names), columns_to_rows(times, &cols))?;
    }

    let (x, y) = if cfg.case.is_total_sz() { (Obs::Sx, Obs::Sz) } else { (Obs::Sx2, Obs::Sz1) };
    let per = times.len();
    let rows: Vec<Vec<f64>> = trajectory_scatter(&ens.records, x, y)
        .into_iter()
        .enumerate()
        .map(|(k, (px, py))| vec![times[k % per], (k / per) as f64, px, py])
        .collect();
    put("scatter.csv", header("t", ["trajectory".into(), x.name(), y.name()]), rows)?;

    let centers = stats.histogram_s3.centers();
    put(
        "final_histogram.csv",
        header("s", ["density_s3".into(), "density_s12".into()]),
        columns_to_rows(&centers, &[stats.histogram_s3.density(), stats.histogram_s12.density()]),
    )?;

    put(
        "collapse_fraction.csv",
        header("t", ["collapsed".into()]),
        columns_to_rows(times, std::slice::from_ref(&stats.collapse_fraction)),
    )?;

    manifest.files = files;
    manifest.complete = true;
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

/// Default output directory: `$QSD_OUT_DIR` or `./out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(super::OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}
