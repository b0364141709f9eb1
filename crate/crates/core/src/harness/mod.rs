//! Measurement cases, ensemble runs, collapse classification, statistics
//! and file output.

mod classify;
mod config;
mod geometry;
mod observables;
mod output;
mod run;
mod stats;

use thiserror::Error;

use crate::entropy::EntropyError;

pub use classify::{
    classify_collapse, first_amplitude_to_vanish, vanishing_time, CollapseTolerances, Outcome, Targets,
    TripletComponent,
};
pub use config::{Case, CaseConfig, Purify};
pub use geometry::{ellipse_distance, petal_point, petal_violation, sz_plane_point, Geometry};
pub use observables::Obs;
pub use output::{default_out_dir, emit_run, fmt_float, observables_for, write_csv, Manifest};
pub use run::{run_ensemble, run_ensemble_with_threads, Ensemble, InvariantReport, TrajectoryRecord};
pub use stats::{
    asymptotic_rate, collapse_fraction, conditional_mean, final_state_histogram, mean_series, settled_time,
    outcome_span_rates, trajectory_scatter, EnsembleStats, SpanRate, Histogram, InvariantSummary, MeanSeries, Quantity, RateFit, RateWindow,
    COLLAPSE_FRACTION, HIST_BINS, MIN_FIT_POINTS,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QSD_OUT_DIR";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no trajectory matches the selection")]
    EmptySelection,
    #[error("fit window holds {0} points, need at least {MIN_FIT_POINTS}")]
    WindowTooShort(usize),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Runs `config` and computes its statistics.
pub fn run_case(config: &CaseConfig) -> Result<(Ensemble, EnsembleStats), HarnessError> {
    let ens = run_ensemble(config)?;
    let stats = EnsembleStats::from_ensemble(&ens);
    Ok((ens, stats))
}
