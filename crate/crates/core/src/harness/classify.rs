use serde::{Deserialize, Serialize};

use crate::coherence::{kets, obs, purity, trace_distance, CoherenceState, DensityMatrix, Mat4, C64};

/// Final-state labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    ZupZup,
    ZupZdown,
    ZdownZup,
    ZdownZdown,
    TripletZero,
    Singlet,
    /// ½(|↑↓⟩⟨↑↓| + |↓↑⟩⟨↓↑|).
    MixedStationary,
    ZupXup,
    ZupXdown,
    ZdownXup,
    ZdownXdown,
    Unresolved,
}

impl Outcome {
    /// The state this label stands for; `None` for [`Outcome::Unresolved`].
    pub fn target(&self) -> Option<CoherenceState> {
        use kets::*;
        let rho = match self {
            Outcome::ZupZup => DensityMatrix::pure(&up_up()),
            Outcome::ZupZdown => DensityMatrix::pure(&up_down()),
            Outcome::ZdownZup => DensityMatrix::pure(&down_up()),
            Outcome::ZdownZdown => DensityMatrix::pure(&down_down()),
            Outcome::TripletZero => DensityMatrix::pure(&triplet_zero()),
            Outcome::Singlet => DensityMatrix::pure(&singlet()),
            Outcome::MixedStationary => {
                let a = up_down() * up_down().adjoint();
                let b = down_up() * down_up().adjoint();
                let m: Mat4 = (a + b) * C64::from(0.5);
                DensityMatrix::new(m).expect("valid state")
            }
            Outcome::ZupXup => DensityMatrix::pure(&product(z_spin(true), x_spin(true))),
            Outcome::ZupXdown => DensityMatrix::pure(&product(z_spin(true), x_spin(false))),
            Outcome::ZdownXup => DensityMatrix::pure(&product(z_spin(false), x_spin(true))),
            Outcome::ZdownXdown => DensityMatrix::pure(&product(z_spin(false), x_spin(false))),
            Outcome::Unresolved => return None,
        };
        Some(crate::coherence::coherence_from_density(&rho).expect("valid state"))
    }

    pub fn is_mixed(&self) -> bool {
        matches!(self, Outcome::MixedStationary)
    }
}

/// Thresholds that decide when a state counts as collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseTolerances {
    /// Maximum trace distance to the target.
    pub trace_distance: f64,
    /// Minimum purity for pure targets.
    pub purity: f64,
    /// Allowed |purity − ½| for the mixed target.
    pub mixed_purity: f64,
    /// Allowed |⟨Sz⟩| for the mixed target.
    pub mixed_sz: f64,
    /// An amplitude has vanished once below this value ...
    pub amp_vanish: f64,
    /// ... and never again above this one.
    pub amp_ceiling: f64,
}

impl Default for CollapseTolerances {
    fn default() -> Self {
        Self { trace_distance: 0.05, purity: 0.995, mixed_purity: 0.02, mixed_sz: 0.05, amp_vanish: 0.02, amp_ceiling: 0.05 }
    }
}

/// Precomputed target states.
#[derive(Debug, Clone)]
pub struct Targets {
    labels: Vec<(Outcome, CoherenceState)>,
    tol: CollapseTolerances,
}

impl Targets {
    pub fn new(outcomes: &[Outcome], tol: CollapseTolerances) -> Self {
        let labels = outcomes.iter().filter_map(|o| o.target().map(|t| (*o, t))).collect();
        Self { labels, tol }
    }

    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        self.labels.iter().map(|(o, _)| *o)
    }

    pub fn classify(&self, state: &CoherenceState) -> Outcome {
        let p = purity(state);
        let best = self
            .labels
            .iter()
            .map(|(o, t)| (*o, trace_distance(state, t)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let Some((outcome, dist)) = best else {
            return Outcome::Unresolved;
        };
        if dist >= self.tol.trace_distance {
            return Outcome::Unresolved;
        }
        let ok = if outcome.is_mixed() {
            (p - 0.5).abs() < self.tol.mixed_purity && obs::sz(state).abs() < self.tol.mixed_sz
        } else {
            p > self.tol.purity
        };
        if ok {
            outcome
        } else {
            Outcome::Unresolved
        }
    }
}

/// Nearest labelled target of `state`, or [`Outcome::Unresolved`] when no
/// target is within tolerance.
pub fn classify_collapse(state: &CoherenceState, targets: &[Outcome], tol: &CollapseTolerances) -> Outcome {
    Targets::new(targets, *tol).classify(state)
}

/// Components of the Sz = ±1, 0 triplet decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TripletComponent {
    Up,
    Zero,
    Down,
}

impl TripletComponent {
    pub const ALL: [TripletComponent; 3] = [TripletComponent::Up, TripletComponent::Zero, TripletComponent::Down];
}

/// Time at which `series` drops below `vanish` for good, meaning it never
/// rises above `ceiling` afterwards.
pub fn vanishing_time(times: &[f64], series: &[f64], vanish: f64, ceiling: f64) -> Option<f64> {
    let n = series.len().min(times.len());
    let mut candidate = None;
    for i in (0..n).rev() {
        if series[i] > ceiling {
            break;
        }
        if series[i] < vanish {
            candidate = Some(i);
        }
    }
    candidate.map(|i| times[i])
}

/// The triplet amplitude that vanishes first, with its vanishing time.
pub fn first_amplitude_to_vanish(times: &[f64], amps: &[[f64; 3]], tol: &CollapseTolerances) -> Option<(TripletComponent, f64)> {
    TripletComponent::ALL
        .into_iter()
        .enumerate()
        .filter_map(|(k, c)| {
            let series: Vec<f64> = amps.iter().map(|a| a[k]).collect();
            vanishing_time(times, &series, tol.amp_vanish, tol.amp_ceiling).map(|t| (c, t))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::StatePreset;

    #[test]
    fn targets_classify_themselves() {
        let all = [
            Outcome::ZupZup,
            Outcome::ZupZdown,
            Outcome::ZdownZup,
            Outcome::ZdownZdown,
            Outcome::TripletZero,
            Outcome::Singlet,
            Outcome::MixedStationary,
        ];
        let tol = CollapseTolerances::default();
        for o in all {
            assert_eq!(classify_collapse(&o.target().unwrap(), &all, &tol), o);
        }
    }

    #[test]
    fn superposition_is_unresolved() {
        let st = StatePreset::CaseBSuperposition.coherence();
        let t = [Outcome::ZupZup, Outcome::ZdownZdown, Outcome::TripletZero];
        assert_eq!(classify_collapse(&st, &t, &CollapseTolerances::default()), Outcome::Unresolved);
    }

    #[test]
    fn vanishing_requires_staying_low() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(vanishing_time(&t, &[0.5, 0.01, 0.04, 0.01, 0.0], 0.02, 0.05), Some(1.0));
        assert_eq!(vanishing_time(&t, &[0.5, 0.01, 0.06, 0.01, 0.0], 0.02, 0.05), Some(3.0));
        assert_eq!(vanishing_time(&t, &[0.5, 0.01, 0.06, 0.03, 0.03], 0.02, 0.05), None);
    }
}
