use serde::{Deserialize, Serialize};

use crate::coherence::{ix, ops, StatePreset};
use crate::dynamics::{Channel, IntegratorConfig, LindbladModel, Scheme};
use crate::entropy::Tolerances;

use super::classify::{CollapseTolerances, Outcome};
use super::HarnessError;

/// The measurement scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Case {
    /// z-spin of each particle, from the singlet.
    Case1,
    /// z-spin of particle 1 and x-spin of particle 2, from the singlet.
    Case2,
    /// Total Sz from the Sx triplet-zero state.
    CaseA,
    /// Total Sz from an equal superposition of |1,1⟩ and the triplet zero.
    CaseB,
    /// Total Sz from |1⟩_x|1⟩_x.
    CaseC,
    /// Total Sz from the maximally mixed state.
    CaseD,
    /// Total Sz from a state with unequal single-spin z components.
    CaseE,
}

impl Case {
    pub const ALL: [Case; 7] = [Case::Case1, Case::Case2, Case::CaseA, Case::CaseB, Case::CaseC, Case::CaseD, Case::CaseE];

    pub fn name(&self) -> &'static str {
        match self {
            Case::Case1 => "case1",
            Case::Case2 => "case2",
            Case::CaseA => "caseA",
            Case::CaseB => "caseB",
            Case::CaseC => "caseC",
            Case::CaseD => "caseD",
            Case::CaseE => "caseE",
        }
    }

    pub fn parse(s: &str) -> Option<Case> {
        Case::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(s))
    }

    /// True for the total-Sz protocol.
    pub fn is_total_sz(&self) -> bool {
        !matches!(self, Case::Case1 | Case::Case2)
    }

    pub fn initial(&self) -> StatePreset {
        match self {
            Case::Case1 | Case::Case2 => StatePreset::Singlet,
            Case::CaseA => StatePreset::SxTripletZero,
            Case::CaseB => StatePreset::CaseBSuperposition,
            Case::CaseC => StatePreset::SxPlusPlus,
            Case::CaseD => StatePreset::CaseDMixed,
            Case::CaseE => StatePreset::CaseEState,
        }
    }

    /// Measurement duration used for the published curves.
    pub fn reference_duration(&self) -> f64 {
        match self {
            Case::Case1 | Case::Case2 | Case::CaseA => 6.0,
            Case::CaseB | Case::CaseC | Case::CaseE => 12.0,
            Case::CaseD => 16.0,
        }
    }

    /// Ensemble size used for the published curves.
    pub fn reference_trajectories(&self) -> usize {
        match self {
            Case::Case1 => 326,
            Case::Case2 => 314,
            Case::CaseA => 600,
            Case::CaseB | Case::CaseC => 370,
            Case::CaseD => 137,
            Case::CaseE => 200,
        }
    }

    /// Default (dynamical, spectator) coordinates, 0-based.
    pub fn default_coordinates(&self) -> (Vec<usize>, Vec<usize>) {
        match self {
            Case::Case1 => (vec![ix::S12], vec![ix::S3, ix::S15]),
            Case::Case2 => (vec![ix::S1, ix::S12], vec![ix::S13]),
            _ => (vec![ix::S3], vec![ix::S12, ix::S15]),
        }
    }
}

/// Extra channel that lifts the degeneracy of the Sz = 0 sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Purify {
    /// Total spin squared.
    S2,
    /// z-spin of particle 2.
    Sz2,
}

impl Purify {
    pub fn parse(s: &str) -> Option<Purify> {
        match s.to_ascii_lowercase().as_str() {
            "s2" => Some(Purify::S2),
            "sz2" => Some(Purify::Sz2),
            _ => None,
        }
    }

    pub fn channel(&self, a: f64) -> Channel {
        match self {
            Purify::S2 => Channel::new("S2", ops::total_squared(), a),
            Purify::Sz2 => Channel::new("Sz2", ops::spin2(3), a),
        }
    }
}

/// Full description of an ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub case: Case,
    pub initial: StatePreset,
    /// a₁, a₂ for the single-spin cases; only `a1` is used for total Sz.
    pub a1: f64,
    pub a2: f64,
    pub dt: f64,
    pub duration: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub dynamical: Vec<usize>,
    pub spectator: Vec<usize>,
    pub purify: Option<Purify>,
    /// Steps between stored samples.
    pub sample_every: usize,
    pub tolerances: Tolerances,
    pub collapse: CollapseTolerances,
    /// Eigenvalue tolerance of the per-step positivity check.
    pub pos_tol: f64,
}

impl CaseConfig {
    /// Reference settings for `case`.
    pub fn new(case: Case) -> Self {
        let (dynamical, spectator) = case.default_coordinates();
        Self {
            case,
            initial: case.initial(),
            a1: 1.0,
            a2: 1.0,
            dt: 1e-4,
            duration: case.reference_duration(),
            n_traj: case.reference_trajectories(),
            seed: 0,
            dynamical,
            spectator,
            purify: None,
            sample_every: 100,
            tolerances: Tolerances::default(),
            collapse: CollapseTolerances::default(),
            pos_tol: crate::coherence::POS_TOL,
        }
    }

    pub fn with_trajectories(mut self, n: usize) -> Self {
        self.n_traj = n;
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_strength(mut self, a: f64) -> Self {
        self.a1 = a;
        self.a2 = a;
        self
    }

    /// Sets the dynamical coordinates; the spectators become the remaining
    /// coordinates of the default group.
    pub fn with_dynamical(mut self, dynamical: Vec<usize>) -> Self {
        let (d, s) = self.case.default_coordinates();
        let group: Vec<usize> = d.into_iter().chain(s).collect();
        self.spectator = group.into_iter().filter(|g| !dynamical.contains(g)).collect();
        self.dynamical = dynamical;
        self
    }

    /// Adds a purifying channel. Such runs track states only.
    pub fn with_purify(mut self, p: Option<Purify>) -> Self {
        self.purify = p;
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_traj == 0 {
            return Err(HarnessError::InvalidConfig("at least one trajectory is required".into()));
        }
        if self.sample_every == 0 {
            return Err(HarnessError::InvalidConfig("sample interval must be positive".into()));
        }
        for a in [self.a1, self.a2] {
            if !(a.is_finite() && a >= 0.0) {
                return Err(HarnessError::InvalidConfig(format!("coupling {a} must be finite and non-negative")));
            }
        }
        if self.purify.is_some() && self.case != Case::CaseD {
            return Err(HarnessError::InvalidConfig("purification applies to caseD only".into()));
        }
        self.integrator().validate().map_err(|e| HarnessError::InvalidConfig(e.to_string()))
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig { dt: self.dt, duration: self.duration, seed: self.seed, scheme: Scheme::EulerMaruyama }
    }

    /// True when duration and ensemble size reach the published values.
    pub fn meets_reference(&self) -> bool {
        self.duration >= self.case.reference_duration() && self.n_traj >= self.case.reference_trajectories()
    }

    pub fn model(&self) -> LindbladModel {
        let base = match self.case {
            Case::Case1 => LindbladModel::case1(self.a1, self.a2),
            Case::Case2 => LindbladModel::case2(self.a1, self.a2),
            _ => LindbladModel::total_sz(self.a1),
        };
        match self.purify {
            Some(p) => base.with_channel(p.channel(self.a1)),
            None => base,
        }
    }

    /// Labelled collapse targets of this run.
    pub fn targets(&self) -> Vec<Outcome> {
        use Outcome::*;
        match (self.case, self.purify) {
            (Case::Case1, _) => vec![ZupZup, ZupZdown, ZdownZup, ZdownZdown],
            (Case::Case2, _) => vec![ZupXup, ZupXdown, ZdownXup, ZdownXdown],
            (Case::CaseD, None) => vec![ZupZup, ZdownZdown, MixedStationary],
            (Case::CaseD, Some(Purify::S2)) => vec![ZupZup, ZdownZdown, TripletZero, Singlet],
            (Case::CaseD, Some(Purify::Sz2)) => vec![ZupZup, ZdownZdown, ZupZdown, ZdownZup],
            (Case::CaseE, _) => vec![ZupZup, ZdownZdown, ZupZdown],
            _ => vec![ZupZup, ZdownZdown, TripletZero],
        }
    }
}
