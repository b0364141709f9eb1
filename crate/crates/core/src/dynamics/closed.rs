//! Hand-written coefficient lists for the three measurement protocols.
//!
//! These serve as independent oracles for [`super::CompiledSde`]. Two rows of
//! the z/z list and two drift rows of the total-Sz list are written with
//! signs re-derived from the master equation, which is what the generic
//! projection produces.

use crate::coherence::{CoherenceState, N};

use super::DiffusionModel;

fn set(v: &mut [f64; N], m: usize, x: f64) {
    v[m - 1] = x;
}

/// z-spin measurement of particle 1 (dW₁, strength a₁) and of particle 2
/// (dW₂, strength a₂).
pub fn case1_coefficients(st: &CoherenceState, a1: f64, a2: f64) -> DiffusionModel {
    let s = |m: usize| st.s[m - 1];
    let (h1, h2) = (0.5 * a1 * a1, 0.5 * a2 * a2);
    let mut a = [0.0; N];
    for m in [1, 2, 13, 14] {
        set(&mut a, m, -h2 * s(m));
    }
    for m in [4, 7, 8, 11] {
        set(&mut a, m, -h1 * s(m));
    }
    for m in [5, 6, 9, 10] {
        set(&mut a, m, -(h1 + h2) * s(m));
    }

    let mut w1 = [0.0; N];
    let mut w2 = [0.0; N];
    let z1 = s(12);
    let z2 = s(3);
    for m in 1..=N {
        set(&mut w1, m, -s(m) * z1);
        set(&mut w2, m, -s(m) * z2);
    }
    // Rows where the measured operator mixes components.
    set(&mut w1, 1, s(13) - s(1) * z1);
    set(&mut w1, 2, s(14) - s(2) * z1);
    set(&mut w1, 3, s(15) - s(3) * z1);
    set(&mut w1, 12, 1.0 - z1 * z1);
    set(&mut w1, 13, s(1) - s(13) * z1);
    set(&mut w1, 14, s(2) - s(14) * z1);
    set(&mut w1, 15, s(3) - s(15) * z1);

    set(&mut w2, 3, 1.0 - z2 * z2);
    set(&mut w2, 4, s(7) - s(4) * z2);
    set(&mut w2, 7, s(4) - s(7) * z2);
    set(&mut w2, 8, s(11) - s(8) * z2);
    set(&mut w2, 11, s(8) - s(11) * z2);
    set(&mut w2, 12, s(15) - s(12) * z2);
    set(&mut w2, 15, s(12) - s(15) * z2);

    for x in w1.iter_mut() {
        *x *= a1;
    }
    for x in w2.iter_mut() {
        *x *= a2;
    }
    DiffusionModel::new(a, vec![w1, w2])
}

/// z-spin measurement of particle 1 (dW₁, a₁) and x-spin measurement of
/// particle 2 (dW₂, a₂).
pub fn case2_coefficients(st: &CoherenceState, a1: f64, a2: f64) -> DiffusionModel {
    let s = |m: usize| st.s[m - 1];
    let (h1, h2) = (0.5 * a1 * a1, 0.5 * a2 * a2);
    let mut a = [0.0; N];
    for m in [2, 3, 14, 15] {
        set(&mut a, m, -h2 * s(m));
    }
    for m in [4, 5, 8, 9] {
        set(&mut a, m, -h1 * s(m));
    }
    for m in [6, 7, 10, 11] {
        set(&mut a, m, -(h1 + h2) * s(m));
    }

    let mut w1 = [0.0; N];
    let mut w2 = [0.0; N];
    let z1 = s(12);
    let x2 = s(1);
    for m in 1..=N {
        set(&mut w1, m, -s(m) * z1);
        set(&mut w2, m, -s(m) * x2);
    }
    set(&mut w1, 1, s(13) - s(1) * z1);
    set(&mut w1, 2, s(14) - s(2) * z1);
    set(&mut w1, 3, s(15) - s(3) * z1);
    set(&mut w1, 12, 1.0 - z1 * z1);
    set(&mut w1, 13, s(1) - s(13) * z1);
    set(&mut w1, 14, s(2) - s(14) * z1);
    set(&mut w1, 15, s(3) - s(15) * z1);

    set(&mut w2, 1, 1.0 - x2 * x2);
    set(&mut w2, 4, s(5) - s(4) * x2);
    set(&mut w2, 5, s(4) - s(5) * x2);
    set(&mut w2, 8, s(9) - s(8) * x2);
    set(&mut w2, 9, s(8) - s(9) * x2);
    set(&mut w2, 12, s(13) - s(12) * x2);
    set(&mut w2, 13, s(12) - s(13) * x2);

    for x in w1.iter_mut() {
        *x *= a1;
    }
    for x in w2.iter_mut() {
        *x *= a2;
    }
    DiffusionModel::new(a, vec![w1, w2])
}

/// The compact noise triple of the total-Sz protocol:
/// ds₁₂ = −aκ dW, ds₃ = −aν dW, ds₁₅ = −aγ dW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SzCompact {
    pub kappa: f64,
    pub nu: f64,
    pub gamma: f64,
}

impl SzCompact {
    pub fn new(s3: f64, s12: f64, s15: f64) -> Self {
        let z = s3 + s12;
        Self {
            kappa: s12 * z - (1.0 + s15),
            nu: s3 * z - (1.0 + s15),
            gamma: z * s15 - z,
        }
    }

    pub fn from_state(st: &CoherenceState) -> Self {
        Self::new(st.get(3), st.get(12), st.get(15))
    }
}

/// Measurement of total Sz at strength a.
pub fn sz_coefficients(st: &CoherenceState, a: f64) -> (DiffusionModel, SzCompact) {
    let s = |m: usize| st.s[m - 1];
    let q = a * a;
    let h = 0.5 * q;
    let mut d = [0.0; N];
    for m in [1, 2, 4, 7, 8, 11, 13, 14] {
        set(&mut d, m, -h * s(m));
    }
    set(&mut d, 5, q * (s(10) - s(5)));
    set(&mut d, 10, q * (s(5) - s(10)));
    set(&mut d, 6, -q * (s(6) + s(9)));
    set(&mut d, 9, -q * (s(6) + s(9)));

    let z = s(3) + s(12);
    let mut w = [0.0; N];
    for m in 1..=N {
        set(&mut w, m, -s(m) * z);
    }
    let pairs = [(1, 13), (2, 14), (4, 7), (7, 4), (8, 11), (11, 8), (13, 1), (14, 2)];
    for (m, n) in pairs {
        set(&mut w, m, s(n) - s(m) * z);
    }
    let compact = SzCompact::new(s(3), s(12), s(15));
    set(&mut w, 3, -compact.nu);
    set(&mut w, 12, -compact.kappa);
    set(&mut w, 15, -compact.gamma);
    for x in w.iter_mut() {
        *x *= a;
    }
    (DiffusionModel::new(d, vec![w]), compact)
}
