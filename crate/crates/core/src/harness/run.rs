use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::{density_from_slice, hermitian_deviation, ix, CoherenceState, N};
use crate::dynamics::euler_increment_into;
use crate::dynamics::noise::WienerSource;
use crate::dynamics::CompiledSde;
use crate::entropy::{EntropyAccumulator, EntropyEngine, Exclusion};

use super::classify::{first_amplitude_to_vanish, Outcome, Targets, TripletComponent};
use super::config::{Case, CaseConfig};
use super::geometry::Geometry;
use super::observables::Obs;
use super::HarnessError;

/// Worst-case invariant residuals seen along one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    /// Steps at which ρ had an eigenvalue below −pos_tol.
    pub positivity_failures: usize,
    /// Smallest eigenvalue over the sampled states.
    pub min_eigenvalue: f64,
    pub max_trace_error: f64,
    pub max_hermitian_error: f64,
    /// max(|s₃ + s₁₂|, |s₁₅ + 1|), for the singlet-start single-spin case.
    pub max_singlet_constraint: Option<f64>,
    /// |⟨S²⟩ − 2|, for starts in the triplet sector.
    pub max_s2_deviation: Option<f64>,
    pub max_geometry_violation: f64,
}

/// One simulated trajectory, sampled on the ensemble time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub index: usize,
    /// Coherence vector at each grid time.
    pub states: Vec<[f64; N]>,
    /// Δs_env at each grid time, truncated at the exclusion time.
    pub entropy: Vec<f64>,
    pub excluded: Option<Exclusion>,
    pub outcome: Outcome,
    pub first_vanish: Option<(TripletComponent, f64)>,
    pub invariants: InvariantReport,
}

impl TrajectoryRecord {
    pub fn is_excluded(&self) -> bool {
        self.excluded.is_some()
    }

    pub fn final_state(&self) -> CoherenceState {
        CoherenceState::new(*self.states.last().expect("at least the initial sample"))
    }

    pub fn series(&self, obs: Obs) -> Vec<f64> {
        self.states.iter().map(|s| obs.eval(s)).collect()
    }
}

/// All trajectories of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub config: CaseConfig,
    pub times: Vec<f64>,
    pub records: Vec<TrajectoryRecord>,
    /// Set when the run does not track entropy.
    pub entropy_unavailable: Option<String>,
}

impl Ensemble {
    pub fn included(&self) -> impl Iterator<Item = &TrajectoryRecord> {
        self.records.iter().filter(|r| !r.is_excluded())
    }

    pub fn n_excluded(&self) -> usize {
        self.records.iter().filter(|r| r.is_excluded()).count()
    }
}

fn starts_in_triplet(config: &CaseConfig) -> bool {
    config.case.is_total_sz() && matches!(config.case, Case::CaseA | Case::CaseB | Case::CaseC)
}

struct Runner<'a> {
    config: &'a CaseConfig,
    sde: CompiledSde,
    engine: Option<EntropyEngine>,
    targets: Targets,
    geometry: Geometry,
    steps: usize,
    samples: usize,
}

impl Runner<'_> {
    fn trajectory(&self, index: usize) -> TrajectoryRecord {
        let cfg = self.config;
        let dt = cfg.dt;
        let k = self.sde.n_channels();
        let mut src = WienerSource::new(cfg.seed, index as u64, k, dt);
        let mut dw = vec![0.0; k];
        let mut a = [0.0; N];
        let mut b = vec![[0.0; N]; k];
        let mut inc = [0.0; N];
        let mut s = cfg.initial.coherence().s;

        let mut states = Vec::with_capacity(self.samples + 1);
        let mut acc = EntropyAccumulator::new();
        let track_singlet = cfg.case == Case::Case1 && cfg.initial == crate::coherence::StatePreset::Singlet;
        let track_s2 = starts_in_triplet(cfg);
        let mut inv = InvariantReport {
            positivity_failures: 0,
            min_eigenvalue: f64::INFINITY,
            max_trace_error: 0.0,
            max_hermitian_error: 0.0,
            max_singlet_constraint: track_singlet.then_some(0.0),
            max_s2_deviation: track_s2.then_some(0.0),
            max_geometry_violation: 0.0,
        };
        let sample = |s: &[f64; N], inv: &mut InvariantReport, states: &mut Vec<[f64; N]>| {
            let rho = density_from_slice(s);
            inv.min_eigenvalue = inv.min_eigenvalue.min(rho.min_eigenvalue());
            inv.max_trace_error = inv.max_trace_error.max((rho.matrix().trace().re - 1.0).abs());
            inv.max_hermitian_error = inv.max_hermitian_error.max(hermitian_deviation(rho.matrix()));
            states.push(*s);
        };
        sample(&s, &mut inv, &mut states);

        for i in 0..self.steps {
            let t = i as f64 * dt;
            src.fill(&mut dw);
            self.sde.eval_into(&s, &mut a, &mut b);
            euler_increment_into(&a, &b, dt, &dw, &mut inc);
            if let Some(engine) = &self.engine {
                if !acc.is_excluded() {
                    acc.record(t, engine.increment_from_full(&s, &inc, dt));
                }
            }
            for (x, d) in s.iter_mut().zip(&inc) {
                *x += d;
            }

            if !density_from_slice(&s).is_positive(cfg.pos_tol) {
                inv.positivity_failures += 1;
            }
            if let Some(c) = inv.max_singlet_constraint.as_mut() {
                *c = c.max((s[ix::S3] + s[ix::S12]).abs()).max((s[ix::S15] + 1.0).abs());
            }
            if let Some(c) = inv.max_s2_deviation.as_mut() {
                *c = c.max((Obs::SSquared.eval(&s) - 2.0).abs());
            }
            inv.max_geometry_violation = inv.max_geometry_violation.max(self.geometry.violation(&s));

            if (i + 1) % cfg.sample_every == 0 {
                sample(&s, &mut inv, &mut states);
                acc.sample((i + 1) as f64 * dt);
            }
        }

        let final_state = CoherenceState::new(s);
        let outcome = self.targets.classify(&final_state);
        let first_vanish = if track_s2 {
            let times: Vec<f64> = (0..states.len()).map(|j| (j * cfg.sample_every) as f64 * dt).collect();
            let amps: Vec<[f64; 3]> = states.iter().map(Obs::triplet_amplitudes).collect();
            first_amplitude_to_vanish(&times, &amps, &cfg.collapse)
        } else {
            None
        };
        let entropy = if self.engine.is_some() { acc.series.iter().map(|(_, v)| *v).collect() } else { Vec::new() };
        TrajectoryRecord {
            index,
            states,
            entropy,
            excluded: acc.excluded,
            outcome,
            first_vanish,
            invariants: inv,
        }
    }
}

/// Runs every trajectory of `config` on the current rayon pool.
/// Trajectory `i` draws only from its own streams, so the result does not
/// depend on the number of worker threads.
pub fn run_ensemble(config: &CaseConfig) -> Result<Ensemble, HarnessError> {
    config.validate()?;
    let model = config.model();
    let sde = CompiledSde::new(&model);
    let (engine, entropy_unavailable) = if config.purify.is_some() {
        (None, Some("entropy is not tracked with a purifying channel".to_string()))
    } else {
        (Some(EntropyEngine::new(&sde, &config.dynamical, &config.spectator, config.tolerances)?), None)
    };
    let integrator = config.integrator();
    let steps = integrator.steps();
    let samples = steps / config.sample_every;
    let runner = Runner {
        config,
        sde,
        engine,
        targets: Targets::new(&config.targets(), config.collapse),
        geometry: Geometry::for_case(config.case, config.initial),
        steps,
        samples,
    };
    let records: Vec<TrajectoryRecord> = (0..config.n_traj).into_par_iter().map(|i| runner.trajectory(i)).collect();
    let times = (0..=samples).map(|j| (j * config.sample_every) as f64 * config.dt).collect();
    Ok(Ensemble { config: config.clone(), times, records, entropy_unavailable })
}

/// [`run_ensemble`] on a dedicated pool with `threads` workers.
pub fn run_ensemble_with_threads(config: &CaseConfig, threads: usize) -> Result<Ensemble, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
    pool.install(|| run_ensemble(config))
}
