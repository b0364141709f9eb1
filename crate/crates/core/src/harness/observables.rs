use serde::{Deserialize, Serialize};

use crate::coherence::{case2_amplitudes, ix, obs, purity, triplet_amplitudes, CoherenceState, N};

/// Scalar functions of the coherence vector recorded by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Obs {
    Sz,
    Sx,
    Sz1,
    Sx2,
    Purity,
    SSquared,
    S3,
    S12,
    S15,
    /// Amplitude of |1⟩_z|1⟩_z.
    AmpUp,
    /// Amplitude of the triplet-zero state.
    AmpZero,
    /// Amplitude of |−1⟩_z|−1⟩_z.
    AmpDown,
    /// Amplitude of |±1⟩_z|±1⟩_x in the order (++, +−, −+, −−).
    ZxAmp(usize),
}

impl Obs {
    pub fn name(&self) -> String {
        match self {
            Obs::Sz => "Sz".into(),
            Obs::Sx => "Sx".into(),
            Obs::Sz1 => "Sz1".into(),
            Obs::Sx2 => "Sx2".into(),
            Obs::Purity => "purity".into(),
            Obs::SSquared => "S2".into(),
            Obs::S3 => "s3".into(),
            Obs::S12 => "s12".into(),
            Obs::S15 => "s15".into(),
            Obs::AmpUp => "amp_up_up".into(),
            Obs::AmpZero => "amp_triplet_zero".into(),
            Obs::AmpDown => "amp_down_down".into(),
            Obs::ZxAmp(k) => ["amp_zup_xup", "amp_zup_xdown", "amp_zdown_xup", "amp_zdown_xdown"][*k].into(),
        }
    }

    pub fn eval(&self, s: &[f64; N]) -> f64 {
        let st = CoherenceState::new(*s);
        match self {
            Obs::Sz => obs::sz(&st),
            Obs::Sx => obs::sx(&st),
            Obs::Sz1 => obs::sz1(&st),
            Obs::Sx2 => obs::sx2(&st),
            Obs::Purity => purity(&st),
            Obs::SSquared => obs::s_squared(&st),
            Obs::S3 => s[ix::S3],
            Obs::S12 => s[ix::S12],
            Obs::S15 => s[ix::S15],
            Obs::AmpUp => triplet_amplitudes(&st)[0],
            Obs::AmpZero => triplet_amplitudes(&st)[1],
            Obs::AmpDown => triplet_amplitudes(&st)[2],
            Obs::ZxAmp(k) => case2_amplitudes(&st)[*k],
        }
    }

    pub fn triplet_amplitudes(s: &[f64; N]) -> [f64; 3] {
        triplet_amplitudes(&CoherenceState::new(*s))
    }
}
