//! Itô dynamics of the coherence vector under continuous measurement.

mod closed;
mod integrate;
mod model;
pub mod noise;
mod sde;

use thiserror::Error;

pub use closed::{case1_coefficients, case2_coefficients, sz_coefficients, SzCompact};
pub use integrate::{
    euler_increment, euler_step, kraus_step, lindblad_reference, IntegratorConfig, KrausPair, Scheme,
};
pub(crate) use integrate::euler_increment_into;
pub use model::{Channel, LindbladModel};
pub use sde::{lindblad_rhs, sde_from_lindblads, ChannelTensor, CompiledSde, DiffusionModel, Mat15};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("a measurement model needs at least one channel")]
    NoChannels,
    #[error("channel {0} has a non-finite operator or a negative coupling")]
    InvalidChannel(String),
    #[error("time step {0} must be positive and finite")]
    InvalidStep(f64),
    #[error("duration {0} must be finite and at least one step")]
    InvalidDuration(f64),
    #[error("Kraus branch probability {0} is negative; the step is too large for the couplings")]
    NegativeProbability(f64),
}
