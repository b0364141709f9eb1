#![allow(dead_code)]

use qsd_entropy::coherence::{coherence_from_density, CoherenceState, DensityMatrix, Ket, Mat4, C64};
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_c<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random density matrix of the given rank (1..=4).
pub fn random_density<R: Rng>(rng: &mut R, rank: usize) -> DensityMatrix {
    let g = Mat4::from_fn(|_, j| if j < rank { gaussian_c(rng) } else { C64::new(0.0, 0.0) });
    let m = g * g.adjoint();
    let t = m.trace();
    DensityMatrix::new(m / t).expect("valid density")
}

pub fn random_state<R: Rng>(rng: &mut R) -> CoherenceState {
    let rank = rng.random_range(1..=4);
    coherence_from_density(&random_density(rng, rank)).expect("valid state")
}

/// Random normalized superposition of the three triplet states.
pub fn random_triplet_ket<R: Rng>(rng: &mut R) -> Ket {
    use qsd_entropy::coherence::kets;
    let mut psi = kets::up_up() * gaussian_c(rng) + kets::triplet_zero() * gaussian_c(rng) + kets::down_down() * gaussian_c(rng);
    let n = psi.norm();
    psi /= C64::from(n);
    psi
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
