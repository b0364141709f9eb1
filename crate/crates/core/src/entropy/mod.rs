//! Environmental stochastic entropy production for singular diffusion.

mod accumulate;
mod closed;
mod coupling;
mod engine;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use accumulate::{accumulate, EntropyAccumulator, Exclusion, StepInput};
pub use closed::{case1_entropy_increment, case1_entropy_parts, sz_entropy_increment, sz_entropy_parts, ClosedIncrement};
pub use coupling::{build_coupling, corrected_derivative, SpectatorCoupling};
pub use engine::{
    entropy_increment_1d, entropy_increment_general, increment_parts, EntropyEngine, IncrementParts, ReducedDiffusion,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("reduced diffusion matrix is singular (smallest eigenvalue {0:e})")]
    SingularD(f64),
    #[error("spectator block is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("found {found} null directions, need {needed}")]
    RankDeficient { found: usize, needed: usize },
    #[error("non-finite entropy increment")]
    NonFinite,
    #[error("noise of s{} depends on s{} outside the chosen coordinates", .row + 1, .coordinate + 1)]
    NotClosed { row: usize, coordinate: usize },
    #[error("dynamical and spectator coordinates must be distinct, in range, and include a dynamical one")]
    InvalidPartition,
}

/// Numerical thresholds of the entropy engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Null eigenvalues are those below `null_tol` times the largest.
    pub null_tol: f64,
    /// The smallest eigenvalue of the reduced matrix must exceed this.
    pub sing_tol: f64,
    /// Largest accepted condition number of the spectator block P.
    pub kappa_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { null_tol: 1e-10, sing_tol: 0.0, kappa_max: 1e12 }
    }
}

impl Tolerances {
    /// Thresholds for comparisons against closed forms, which lose
    /// precision once D falls below about 1e-12.
    pub fn oracle() -> Self {
        Self { sing_tol: 1e-12, ..Self::default() }
    }
}
