//! Small shared helpers: seed derivation and float formatting.

/// SplitMix64 step. Used to derive independent sub-seeds from a master seed
/// so that work units (queries, trials, grid points) get decorrelated RNG
/// streams that depend only on their index.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a master seed and a stream index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

/// Derive a sub-seed from a master seed and two stream indices.
pub fn derive_seed2(master: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(master, a), b)
}

/// Format a float with 9 significant digits, the convention for all
/// floating-point values written to data files.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.8e}")
}
