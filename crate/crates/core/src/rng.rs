//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator keyed by `seed_from_u64(seed)` with its
//! 64-bit stream id selecting an independent keystream, so ensembles, noise,
//! signals and solver index draws never share state. Per-trial seeds come from
//! [`derive_seed`] (SplitMix64 finaliser), making trials order-independent.
//! Gaussian variates use `rand_distr::StandardNormal` (ziggurat).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const ENSEMBLE: u64 = 1;
pub const NOISE: u64 = 2;
pub const SIGNAL: u64 = 3;
pub const INIT: u64 = 4;
pub const SOLVER: u64 = 5;
pub const ANALYSIS: u64 = 6;

pub fn stream(seed: u64, id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for item `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}
