use rand::Rng;

use crate::coherence::{CoherenceState, DensityMatrix, Mat4, C64, N};

use super::sde::lindblad_rhs;
use super::{DiffusionModel, DynamicsError, LindbladModel};

/// Supported stepping schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 1e-4, duration: 6.0, seed: 0, scheme: Scheme::EulerMaruyama }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::InvalidStep(self.dt));
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return Err(DynamicsError::InvalidDuration(self.duration));
        }
        Ok(())
    }

    /// Number of steps, rounding duration/dt to the nearest integer.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// A dt + B dW, the Euler–Maruyama increment.
#[inline]
pub fn euler_increment(dm: &DiffusionModel, dt: f64, dw: &[f64]) -> [f64; N] {
    let mut inc = [0.0; N];
    euler_increment_into(&dm.a, &dm.b, dt, dw, &mut inc);
    inc
}

#[inline]
pub(crate) fn euler_increment_into(a: &[f64; N], b: &[[f64; N]], dt: f64, dw: &[f64], inc: &mut [f64; N]) {
    for m in 0..N {
        let mut x = a[m] * dt;
        for (col, w) in b.iter().zip(dw) {
            x += col[m] * w;
        }
        inc[m] = x;
    }
}

/// s' = s + A dt + B dW, t' = t + dt.
pub fn euler_step(s: &CoherenceState, dm: &DiffusionModel, dt: f64, dw: &[f64]) -> CoherenceState {
    let inc = euler_increment(dm, dt, dw);
    let mut out = *s;
    for (x, d) in out.s.iter_mut().zip(inc) {
        *x += d;
    }
    out.t += dt;
    out
}

/// The two incremental Kraus operators of one channel,
/// M± = (I + A±)/√2 with A± = −iH dt − ½L†L dt ± L√dt, and their
/// probabilities at the current state.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausPair {
    pub m_plus: Mat4,
    pub m_minus: Mat4,
    pub p_plus: f64,
    pub p_minus: f64,
}

impl KrausPair {
    /// `h` is the share of the Hamiltonian assigned to this channel.
    pub fn new(h: &Mat4, l: &Mat4, dt: f64, rho: &Mat4) -> Self {
        let id = Mat4::identity();
        let base = h * C64::new(0.0, -dt) - l.adjoint() * l * C64::from(0.5 * dt);
        let jump = l * C64::from(dt.sqrt());
        let r = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let m_plus = (id + base + jump) * r;
        let m_minus = (id + base - jump) * r;
        let p_plus = (m_plus * rho * m_plus.adjoint()).trace().re;
        let p_minus = (m_minus * rho * m_minus.adjoint()).trace().re;
        Self { m_plus, m_minus, p_plus, p_minus }
    }

    /// Σ_j M_j†M_j − I.
    pub fn completeness_defect(&self) -> Mat4 {
        self.m_plus.adjoint() * self.m_plus + self.m_minus.adjoint() * self.m_minus - Mat4::identity()
    }
}

/// One Kraus transition per channel, applied in channel order. The
/// Hamiltonian is split evenly across channels.
pub fn kraus_step<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    model: &LindbladModel,
    dt: f64,
    rng: &mut R,
) -> Result<DensityMatrix, DynamicsError> {
    let share = model.hamiltonian * C64::from(1.0 / model.n_channels() as f64);
    let mut m = *rho.matrix();
    for ch in &model.channels {
        let pair = KrausPair::new(&share, &ch.lindblad(), dt, &m);
        if pair.p_plus < -1e-12 || pair.p_minus < -1e-12 {
            return Err(DynamicsError::NegativeProbability(pair.p_plus.min(pair.p_minus)));
        }
        let total = pair.p_plus + pair.p_minus;
        let u: f64 = rng.random();
        let (k, p) = if u * total < pair.p_plus {
            (pair.m_plus, pair.p_plus)
        } else {
            (pair.m_minus, pair.p_minus)
        };
        m = k * m * k.adjoint() * C64::from(1.0 / p);
    }
    // Restore exact Hermiticity lost to round-off in the products.
    m = (m + m.adjoint()) * C64::from(0.5);
    Ok(DensityMatrix::from_raw(m))
}

/// Deterministic RK4 integration of the Lindblad equation. Returns
/// `(t, ρ̄)` every `stride` steps including t = 0 and the final time.
pub fn lindblad_reference(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    dt: f64,
    duration: f64,
    stride: usize,
) -> Vec<(f64, DensityMatrix)> {
    let steps = (duration / dt).round() as usize;
    let stride = stride.max(1);
    let f = |r: &Mat4| lindblad_rhs(model, r);
    let mut rho = *rho0.matrix();
    let mut out = vec![(0.0, *rho0)];
    let h = C64::from(dt);
    let half = C64::from(0.5 * dt);
    let sixth = C64::from(dt / 6.0);
    for i in 1..=steps {
        let k1 = f(&rho);
        let k2 = f(&(rho + k1 * half));
        let k3 = f(&(rho + k2 * half));
        let k4 = f(&(rho + k3 * h));
        rho += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * sixth;
        if i % stride == 0 || i == steps {
            out.push((i as f64 * dt, DensityMatrix::from_raw(rho)));
        }
    }
    out
}
