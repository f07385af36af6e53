//! Deterministic seeding and sampling helpers shared across the workspace.
//!
//! Every random quantity in the system is derived from a master seed through
//! [`derive`], so the order in which work items run (including parallel
//! fan-out) never changes what any individual item sees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Real;

/// splitmix64 finalizer; good avalanche behavior for seed derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Child seed for a (domain, index) pair under a master seed. Stable across
/// platforms and execution order.
pub fn derive(master: u64, domain: &str, idx: u64) -> u64 {
    splitmix64(master ^ fnv1a(domain.as_bytes()) ^ splitmix64(idx.wrapping_add(0x9e37)))
}

/// Deterministic stream cipher RNG for a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal sample via Box-Muller (keeps dependencies minimal and the
/// byte stream consumption explicit).
pub fn normal(rng: &mut ChaCha8Rng) -> Real {
    let u1: Real = rng.gen_range(Real::MIN_POSITIVE..1.0);
    let u2: Real = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Fill a buffer with scaled normal samples.
pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize, std: Real) -> Vec<Real> {
    (0..n).map(|_| normal(rng) * std).collect()
}

/// Stable content hash for strings (used to pick among template variants).
pub fn text_hash(text: &str) -> u64 {
    fnv1a(text.as_bytes())
}
