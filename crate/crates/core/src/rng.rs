//! Seeding helpers. All randomness in the crate comes from ChaCha8 streams
//! (`rand_chacha` 0.9) keyed by seeds derived here, so results depend only
//! on the run seed and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Name of the generator backing [`seeded_rng`], echoed in run manifests.
pub const GENERATOR: &str = "rand_chacha-0.9/ChaCha8Rng";

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `(seed, tag)`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Derives a child seed from a string label (e.g. a patient id), FNV-1a.
pub fn derive_seed_str(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive_seed(seed, h)
}

/// Fisher-Yates shuffle of `0..n`.
pub fn permutation(n: usize, rng: &mut Rng) -> alloc::vec::Vec<usize> {
    use rand::seq::SliceRandom;
    let mut idx: alloc::vec::Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}
