//! Per-trajectory random streams.
//!
//! Every trajectory owns a ChaCha8 stream keyed by the root seed and selected
//! by the trajectory index through the cipher's stream id. ChaCha is a
//! counter-mode generator, so stream `i` yields the same draws no matter how
//! trajectories are scheduled across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct TrajectoryRng {
    inner: ChaCha8Rng,
}

impl TrajectoryRng {
    pub fn new(root_seed: u64, trajectory: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(root_seed);
        inner.set_stream(trajectory);
        Self { inner }
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}
