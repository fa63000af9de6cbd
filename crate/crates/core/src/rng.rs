//! Deterministic random-number plumbing.
//!
//! Every random draw in the simulator comes from a ChaCha8 stream derived
//! statelessly from `(master seed, domain label, indices)`. Trials can
//! therefore run in any order, on any number of threads, and reproduce the
//! same values bit for bit.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};
use std::f64::consts::TAU;

/// Derive an independent stream for `(master, domain, indices)`.
///
/// The 256-bit ChaCha seed is the SHA-256 digest of the inputs, so streams
/// for different trials, variants, or purposes never overlap.
pub fn substream(master: u64, domain: &str, indices: &[u64]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([domain.len() as u8]);
    hasher.update(domain.as_bytes());
    for ix in indices {
        hasher.update(ix.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Uniform phase on `[0, 2*pi)`.
pub fn sample_phase(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>() * TAU
}

/// Real Gaussian `N(mean, std^2)`.
pub fn sample_gaussian(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + std * z
}

/// Laplace draw via the inverse CDF, `scale` being the classical `b`
/// parameter (standard deviation `b*sqrt(2)`).
pub fn sample_laplace(rng: &mut ChaCha8Rng, mean: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        return mean;
    }
    // u in [-1/2, 1/2); inverse CDF keeps the draw deterministic.
    let u = rng.random::<f64>() - 0.5;
    mean - scale * u.signum() * (-2.0 * u.abs()).ln_1p()
}

/// Circularly symmetric complex Gaussian `CN(0, 1)`.
pub fn sample_complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
