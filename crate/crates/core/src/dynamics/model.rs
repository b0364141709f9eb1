use crate::coherence::{ops, Mat4, C64};

use super::DynamicsError;

/// One measurement channel L = coupling · operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub label: String,
    /// Operator at unit coupling.
    pub operator: Mat4,
    pub coupling: f64,
}

impl Channel {
    pub fn new(label: impl Into<String>, operator: Mat4, coupling: f64) -> Self {
        Self { label: label.into(), operator, coupling }
    }

    /// The full Lindblad operator with the coupling folded in.
    pub fn lindblad(&self) -> Mat4 {
        self.operator * C64::from(self.coupling)
    }
}

/// System Hamiltonian plus the list of measured channels.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    pub hamiltonian: Mat4,
    pub channels: Vec<Channel>,
}

impl LindbladModel {
    pub fn new(hamiltonian: Mat4, channels: Vec<Channel>) -> Result<Self, DynamicsError> {
        if channels.is_empty() {
            return Err(DynamicsError::NoChannels);
        }
        for ch in &channels {
            let finite = ch.coupling.is_finite()
                && ch.coupling >= 0.0
                && ch.operator.iter().all(|z| z.re.is_finite() && z.im.is_finite());
            if !finite {
                return Err(DynamicsError::InvalidChannel(ch.label.clone()));
            }
        }
        if !hamiltonian.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(DynamicsError::InvalidChannel("hamiltonian".into()));
        }
        Ok(Self { hamiltonian, channels })
    }

    fn measurement(channels: Vec<Channel>) -> Self {
        Self::new(Mat4::zeros(), channels).expect("built-in protocols are valid")
    }

    /// z-spin of particle 1 (dW₁) and z-spin of particle 2 (dW₂).
    pub fn case1(a1: f64, a2: f64) -> Self {
        Self::measurement(vec![
            Channel::new("Sz1", ops::spin1(3), a1),
            Channel::new("Sz2", ops::spin2(3), a2),
        ])
    }

    /// z-spin of particle 1 (dW₁) and x-spin of particle 2 (dW₂).
    pub fn case2(a1: f64, a2: f64) -> Self {
        Self::measurement(vec![
            Channel::new("Sz1", ops::spin1(3), a1),
            Channel::new("Sx2", ops::spin2(1), a2),
        ])
    }

    /// Total z-spin of both particles.
    pub fn total_sz(a: f64) -> Self {
        Self::measurement(vec![Channel::new("Sz", ops::total(3), a)])
    }

    pub fn with_channel(mut self, ch: Channel) -> Self {
        self.channels.push(ch);
        self
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }
}
