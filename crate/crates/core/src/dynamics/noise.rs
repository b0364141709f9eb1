use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Streams reserved per trajectory; channel `k` uses stream slot `k`.
const SLOTS: u64 = 256;
/// Slot used by the Kraus cross-check stepper.
pub const KRAUS_SLOT: u64 = SLOTS - 1;

/// Independent random stream for (master seed, trajectory, slot).
pub fn stream(seed: u64, trajectory: u64, slot: u64) -> ChaCha8Rng {
    assert!(slot < SLOTS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory * SLOTS + slot);
    rng
}

/// Wiener increments of one trajectory, one stream per channel. The draws
/// of a channel depend only on (seed, trajectory, channel), never on the
/// thread that runs the trajectory.
pub struct WienerSource {
    rngs: Vec<ChaCha8Rng>,
    sqrt_dt: f64,
}

impl WienerSource {
    pub fn new(seed: u64, trajectory: u64, channels: usize, dt: f64) -> Self {
        let rngs = (0..channels as u64).map(|k| stream(seed, trajectory, k)).collect();
        Self { rngs, sqrt_dt: dt.sqrt() }
    }

    #[inline]
    pub fn fill(&mut self, dw: &mut [f64]) {
        for (w, rng) in dw.iter_mut().zip(self.rngs.iter_mut()) {
            let z: f64 = StandardNormal.sample(rng);
            *w = self.sqrt_dt * z;
        }
    }
}
