//! Deterministic stream splitting for the Monte Carlo engine.
//!
//! Every random quantity is keyed by (base seed, purpose tag, entity
//! indices) through a splitmix-style hash instead of drawn from one
//! sequential stream. Changing a scheme's placement therefore cannot
//! shift the fading or request draws of another scheme run under the
//! same seed, which is what makes A/B comparisons common-random-number
//! comparisons, and trials can be evaluated in any order or in parallel
//! with identical results.

pub const TAG_TRIAL: u64 = 0x7472_6961;
pub const TAG_BS_GEOM: u64 = 0x6273_6765;
pub const TAG_USER_GEOM: u64 = 0x7573_6765;
pub const TAG_GROUP: u64 = 0x6772_7570;
pub const TAG_REQUEST: u64 = 0x7265_7173;
pub const TAG_CACHE: u64 = 0x6361_6368;
pub const TAG_FADING: u64 = 0x6661_6465;
pub const TAG_SCHED: u64 = 0x7363_6864;
pub const TAG_POINT: u64 = 0x706f_696e;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a seed with a sequence of parts into a new 64-bit seed.
#[inline]
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    for &p in parts {
        h = mix64(h.wrapping_add(GOLDEN) ^ mix64(p.wrapping_add(GOLDEN)));
    }
    h
}

/// Uniform draw in [0, 1) from a hashed word.
#[inline]
pub fn unit_uniform(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Unit-mean exponential draw from a hashed word (Rayleigh fading power).
#[inline]
pub fn unit_exponential(word: u64) -> f64 {
    // map to (0, 1] so the logarithm stays finite
    let u = ((word >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
    -u.ln()
}
