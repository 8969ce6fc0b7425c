//! Seed splitting. Every random stream is a ChaCha8 generator keyed by the
//! 64-bit master seed, with the stream id `4 * index + purpose` selecting an
//! independent keystream, so no two (purpose, index) pairs share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Data = 0,
    Chain = 1,
    Prior = 2,
}

pub fn stream(master: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index.wrapping_mul(4).wrapping_add(purpose as u64));
    rng
}
