//! Named random substreams derived from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GV_PLACEMENT: &str = "gv-placement";
pub const SR_SELECTION: &str = "sr-selection";
pub const LIGHT_DROP: &str = "light-drop";
pub const BACKOFF: &str = "backoff";
pub const CONSTELLATION_SUBSET: &str = "constellation-subset";

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the substream `name` under `master`.
pub fn substream_seed(master: u64, name: &str) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(name)))
}

pub fn substream(master: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(master, name))
}
