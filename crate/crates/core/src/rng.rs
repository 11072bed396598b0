//! Counter-based random streams keyed by (master seed, purpose, lane, round).
//!
//! Every draw in an episode comes from a stream addressed by its purpose and
//! round, so context draws, per-arm rewards and agent randomness never
//! interfere and any single draw can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Context,
    Reward,
    Agent,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Context => 0x636f_6e74_6578_7400,
            Purpose::Reward => 0x7265_7761_7264_0000,
            Purpose::Agent => 0x6167_656e_7400_0000,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The stream for one `(purpose, lane)` pair at one round.
///
/// `lane` separates parallel streams of the same purpose, e.g. one per arm.
pub fn stream(master: u64, purpose: Purpose, lane: u64, round: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(master ^ purpose.tag()) ^ lane);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(round);
    rng
}
