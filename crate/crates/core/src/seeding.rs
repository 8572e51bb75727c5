//! Deterministic seed derivation.
//!
//! Every random choice in the toolkit flows from a master seed through
//! [`derive_seed`], so any experiment cell can be reproduced in isolation
//! from its (master seed, label) key alone. The scheme is FNV-1a over the
//! label bytes followed by a SplitMix64 finalizer; it is fixed here rather
//! than borrowed from `std` hashers, whose output may change between
//! releases.

/// Mixes a master seed with a textual label into an independent stream seed.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf29ce484222325;
    const FNV_PRIME: u64 = 0x100000001b3;
    let mut h = FNV_OFFSET ^ master;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

/// SplitMix64 finalizer; also handy for turning a counter into a seed.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
