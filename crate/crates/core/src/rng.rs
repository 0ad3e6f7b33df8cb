//! Reproducible random streams.
//!
//! Every replicate gets its own ChaCha stream keyed by the master seed and
//! selected by the replicate index, so a replicate's draws depend only on
//! `(master_seed, index)` and never on scheduling order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type StreamRng = ChaCha8Rng;

/// Stream for replicate `index` under `master_seed`.
pub fn replicate_stream(master_seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Stream reserved for work that is not a replicate (initial-point draws,
/// stationary averages). Lives in the top half of the stream space so it can
/// never collide with replicate indices.
pub fn auxiliary_stream(master_seed: u64, purpose: u64) -> StreamRng {
    replicate_stream(master_seed, (1 << 63) | purpose)
}

/// Fills `out` with independent N(0, scale²) draws.
#[inline]
pub fn fill_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, scale: f64, out: &mut [f64]) {
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v = scale * z;
    }
}
