const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function; a bijection on `u64`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` of `base`. For a fixed `base` this is injective
/// in `stream`: an odd-multiplier affine step followed by a bijective mixer.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base.wrapping_add(stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn trial_seed(master: u64, trial: u64) -> u64 {
    derive_seed(master, trial)
}
