//! Counter-based seed derivation. Every worker (cell, run, bin, ...) gets an
//! independent deterministic stream from the master seed plus its indices, so
//! parallel and sequential execution produce identical outputs.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a path of indices.
pub fn derive(base: u64, indices: &[u64]) -> u64 {
    let mut h = splitmix64(base);
    for &i in indices {
        h = splitmix64(h ^ i.wrapping_mul(0x2545f4914f6cdd1d));
    }
    h
}
