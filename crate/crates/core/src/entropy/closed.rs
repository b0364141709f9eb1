//! Closed-form increments for two protocols, used as oracles for the
//! generic engine.

use crate::dynamics::SzCompact;

use super::EntropyError;

/// Drift rate and Wiener coefficients of a closed-form increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedIncrement<const K: usize> {
    pub drift: f64,
    pub noise: [f64; K],
}

impl<const K: usize> ClosedIncrement<K> {
    pub fn apply(&self, dw: &[f64; K], dt: f64) -> f64 {
        self.drift * dt + self.noise.iter().zip(dw).map(|(c, w)| c * w).sum::<f64>()
    }
}

/// z/z measurement of both spins with dynamical coordinate s₁₂ on the
/// singlet constraint surface (R₃,₁₂ = −1, R₁₅,₁₂ = 0), a₁ = a₂ = 1.
pub fn case1_entropy_parts(s3: f64, s12: f64, s15: f64, sing_tol: f64) -> Result<ClosedIncrement<2>, EntropyError> {
    let u = s12 * s12 - 1.0;
    let w = s3 * s12 - s15;
    let den = u * u + w * w;
    if !(den.is_finite() && den > sing_tol) {
        return Err(EntropyError::SingularD(den));
    }
    let x = s3 * w + 2.0 * s12 * u - s12 * w;
    let poly = s3 * s3 - 4.0 * s3 * s12 + 7.0 * s12 * s12 + 2.0 * s15 - 2.0;
    let drift = -poly + 2.0 * x * x / den;
    let k = 2.0 * x / den;
    Ok(ClosedIncrement { drift, noise: [k * u, k * w] })
}

pub fn case1_entropy_increment(s3: f64, s12: f64, s15: f64, dw1: f64, dw2: f64, dt: f64) -> Result<f64, EntropyError> {
    let inc = case1_entropy_parts(s3, s12, s15, 0.0)?.apply(&[dw1, dw2], dt);
    if inc.is_finite() {
        Ok(inc)
    } else {
        Err(EntropyError::NonFinite)
    }
}

/// Total-Sz measurement with dynamical coordinate s₃ and spectators
/// s₁₂, s₁₅.
pub fn sz_entropy_parts(s3: f64, s12: f64, s15: f64, a: f64, sing_tol: f64) -> Result<ClosedIncrement<1>, EntropyError> {
    let SzCompact { kappa, nu, gamma } = SzCompact::new(s3, s12, s15);
    if !(nu.is_finite() && nu.abs() > sing_tol) {
        return Err(EntropyError::SingularD(nu));
    }
    let z = 4.0 * s3 * s3 * s3 + 8.0 * s3 * s3 * s12 + 4.0 * s3 * s12 * s12
        - 8.0 * s3 * s15
        - 4.0 * s3
        - 4.0 * s12 * s15;
    let y = 4.0 * z;
    let spectator = -((-(4.0 * s3 + 2.0 * s12) * gamma + (4.0 * s3 * s3 + 4.0 * s3 * s12 - 2.0 * s15) * kappa) / nu);
    let curvature = -(6.0 * s3 * s3 + 8.0 * s3 * s12 + 2.0 * s12 * s12 - 4.0 * s15 - 2.0);
    let drift = a * a * (spectator + curvature + y * y / (32.0 * nu * nu));
    Ok(ClosedIncrement { drift, noise: [a * z / nu] })
}

pub fn sz_entropy_increment(s3: f64, s12: f64, s15: f64, a: f64, dw: f64, dt: f64) -> Result<f64, EntropyError> {
    let inc = sz_entropy_parts(s3, s12, s15, a, 0.0)?.apply(&[dw], dt);
    if inc.is_finite() {
        Ok(inc)
    } else {
        Err(EntropyError::NonFinite)
    }
}
