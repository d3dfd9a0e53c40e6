//! Seeded random streams: every sample draws from its own stream so that
//! results do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Environment variable consulted when no seed is given.
pub const SEED_ENV: &str = "QHAM_SEED";

/// Independent generator for sample `index` under master `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
