use serde::{Deserialize, Serialize};

use super::EntropyError;

/// Why and when a trajectory stopped contributing entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub t: f64,
    pub reason: String,
}

/// Running Δs_env of one trajectory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EntropyAccumulator {
    pub value: f64,
    /// `(t, Δs_env)` samples.
    pub series: Vec<(f64, f64)>,
    pub excluded: Option<Exclusion>,
}

impl EntropyAccumulator {
    pub fn new() -> Self {
        Self { value: 0.0, series: vec![(0.0, 0.0)], excluded: None }
    }

    pub fn is_excluded(&self) -> bool {
        self.excluded.is_some()
    }

    /// Adds one step's increment. The first error marks the trajectory
    /// excluded; later steps are ignored.
    pub fn record(&mut self, t: f64, increment: Result<f64, EntropyError>) {
        if self.excluded.is_some() {
            return;
        }
        match increment {
            Ok(x) if x.is_finite() => self.value += x,
            Ok(_) => self.excluded = Some(Exclusion { t, reason: EntropyError::NonFinite.to_string() }),
            Err(e) => self.excluded = Some(Exclusion { t, reason: e.to_string() }),
        }
    }

    /// Appends a sample of the current value at time `t`.
    pub fn sample(&mut self, t: f64) {
        if self.excluded.is_none() {
            self.series.push((t, self.value));
        }
    }
}

/// One step of a trajectory as seen by the entropy bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInput<'a> {
    pub t: f64,
    pub s: &'a [f64],
    pub dx: &'a [f64],
    pub dw: &'a [f64],
    pub dt: f64,
}

/// Sums `increment` over a stream of steps, sampling every
/// `sample_every` steps.
pub fn accumulate<'a, I, F>(steps: I, mut increment: F, sample_every: usize) -> EntropyAccumulator
where
    I: IntoIterator<Item = StepInput<'a>>,
    F: FnMut(&StepInput<'a>) -> Result<f64, EntropyError>,
{
    let every = sample_every.max(1);
    let mut acc = EntropyAccumulator::new();
    for (i, step) in steps.into_iter().enumerate() {
        if acc.is_excluded() {
            break;
        }
        acc.record(step.t, increment(&step));
        if (i + 1) % every == 0 {
            acc.sample(step.t + step.dt);
        }
    }
    acc
}
