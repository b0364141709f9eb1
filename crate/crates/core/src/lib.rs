//! Quantum state diffusion of two spin-1/2 particles under continuous
//! measurement, with the environmental stochastic entropy production of
//! each trajectory.
//!
//! - [`coherence`]: density matrices, the generator basis and presets.
//! - [`dynamics`]: Itô coefficients, Euler–Maruyama and Kraus steppers,
//!   and the Lindblad reference integrator.
//! - [`entropy`]: entropy increments for singular diffusion matrices.
//! - [`harness`]: measurement cases, ensembles, statistics and output.

pub mod coherence;
pub mod dynamics;
pub mod entropy;
pub mod harness;
