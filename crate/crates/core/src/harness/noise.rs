//! Reproducible noise.
//!
//! The generator is ChaCha8 seeded with `seed_from_u64`. Uniforms on
//! `[0, 1)` take the top 53 bits of `next_u64`; normals come from the
//! Marsaglia polar method, both variates of each accepted pair being used.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_finite, Error, Result};

/// `(next_u64 >> 11) · 2^{-53}`
pub fn uniform01<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `n` standard normal variates by the polar method.
pub fn standard_normals<R: RngCore>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let u = 2.0 * uniform01(rng) - 1.0;
        let v = 2.0 * uniform01(rng) - 1.0;
        let s = u * u + v * v;
        if s == 0.0 || s >= 1.0 {
            continue;
        }
        let f = (-2.0 * s.ln() / s).sqrt();
        out.push(u * f);
        out.push(v * f);
    }
    out.truncate(n);
    out
}

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derived seed for a `(parent, index)` pair.
pub fn sub_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// `θ` with `m` entries: standard normals rescaled to `max |θ| = 1`.
pub fn normalized_theta(m: usize, seed: u64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Dimension("noise needs at least one node".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = standard_normals(&mut rng, m);
    let max = theta.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    // all-zero draws have probability zero, but keep the contract
    if max == 0.0 {
        theta[0] = 1.0;
    } else {
        theta.iter_mut().for_each(|x| *x /= max);
    }
    Ok(theta)
}

/// `f^δ(t_j) = f(t_j) + δ θ_j` for exact node values `f(t_j)`.
pub fn gen_noise(exact: &[f64], delta: f64, seed: u64) -> Result<Vec<f64>> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("δ must be nonnegative, got {delta}")));
    }
    ensure_finite(exact)?;
    let theta = normalized_theta(exact.len(), seed)?;
    Ok(exact.iter().zip(&theta).map(|(f, t)| f + delta * t).collect())
}
