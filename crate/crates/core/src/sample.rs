//! Deterministic random sampling helpers shared by the machine samplers,
//! the PO checker, and the harness.
//!
//! Values are drawn from rational grids with denominator <= 64; range
//! samplers spend roughly 30% of their draws on the range boundaries so that
//! guard-equality manifolds are exercised.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::scalar::Scalar;

pub const MAX_DEN: i64 = 64;

/// Derives an independent sub-seed from a base seed and a label, so any
/// sub-run is reproducible in isolation.
pub fn seed_for(base: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn rng_for(base: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed_for(base, label))
}

/// Uniform draw from the rational grid `{k/den : 0 <= k <= den}` scaled to
/// `[lo, hi]`, with a freshly drawn denominator `1..=64`.
pub fn rat_in<S: Scalar>(rng: &mut ChaCha8Rng, lo: &S, hi: &S) -> S {
    debug_assert!(lo <= hi);
    let den = rng.gen_range(1..=MAX_DEN);
    let num = rng.gen_range(0..=den);
    lo.clone() + (hi.clone() - lo.clone()) * S::from_ratio(num, den)
}

/// Like [`rat_in`], but ~15% of draws return `lo` exactly and ~15% `hi`.
pub fn rat_in_biased<S: Scalar>(rng: &mut ChaCha8Rng, lo: &S, hi: &S) -> S {
    match rng.gen_range(0..100u32) {
        0..=14 => lo.clone(),
        15..=29 => hi.clone(),
        _ => rat_in(rng, lo, hi),
    }
}

/// Uniform draw snapped to the absolute grid `{m/MAX_DEN}`, clamped to
/// `[lo, hi]`. Unlike [`rat_in`] the grid does not nest, so denominators stay
/// bounded over arbitrarily long runs.
pub fn grid_in<S: Scalar>(rng: &mut ChaCha8Rng, lo: &S, hi: &S) -> S {
    debug_assert!(lo <= hi);
    let lof = (lo.to_f64() * MAX_DEN as f64).ceil() as i64;
    let hif = (hi.to_f64() * MAX_DEN as f64).floor() as i64;
    if lof >= hif {
        return lo.clone();
    }
    let m = rng.gen_range(lof..=hif);
    S::from_ratio(m, MAX_DEN)
        .max_s(lo.clone())
        .min_s(hi.clone())
}

pub fn coin(rng: &mut ChaCha8Rng, percent: u32) -> bool {
    rng.gen_range(0..100u32) < percent
}

pub fn int_in(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> u32 {
    rng.gen_range(lo..=hi)
}
