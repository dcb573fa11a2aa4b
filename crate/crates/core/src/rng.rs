//! Seed plumbing. One master seed is threaded through every operation and
//! sub-seeds are derived per stream so results never depend on call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed for `stream` from `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Named streams, so unrelated operations sharing a master seed do not collide.
/// Stream identifiers mixed into the master seed, one per consumer.
pub mod stream {
    pub const FOLDS: u64 = 0x464f_4c44;
    pub const FOLD_MODEL: u64 = 0x4d4f_4445_4c00;
    pub const TREE: u64 = 0x5452_4545_0000;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const MEMBER: u64 = 0x4d45_4d42_0000;
    pub const BALANCE: u64 = 0x4241_4c41;
    pub const MODEL: u64 = 0x4d4f_444c;
    pub const EVAL: u64 = 0x4556_414c;
    pub const INDIRECT: u64 = 0x494e_4449;
    pub const ABLATION: u64 = 0x4142_4c41;
    pub const SYNTH_FEATURES: u64 = 0x5346_0000;
    pub const SYNTH_GROUPS: u64 = 0x5347;
    pub const SYNTH_LABELS: u64 = 0x534c;
    pub const SYNTH_NOISE: u64 = 0x534e;
}
