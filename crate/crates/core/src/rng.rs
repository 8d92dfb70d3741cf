//! Seed derivation.
//!
//! Every component draws from its own ChaCha8 stream whose seed is derived
//! from the global seed and a component label:
//!
//! ```text
//! component_seed = splitmix64(global ^ fnv1a64(label))
//! ```
//!
//! Labels are path-like (`"cv"`, `"optimizer/pipeline"`, `"fit/fold3"`), so
//! adding a component never shifts the streams of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn derive_seed(global: u64, label: &str) -> u64 {
    splitmix64(global ^ fnv1a64(label.as_bytes()))
}

pub fn component_rng(global: u64, label: &str) -> Rng {
    Rng::seed_from_u64(derive_seed(global, label))
}
