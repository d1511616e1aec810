//! Small shared helpers: deterministic RNG derivation and running statistics.

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Labels for independent random streams derived from one block seed.
///
/// Streams are decorrelated by mixing the label into the seed with a
/// SplitMix64 finalizer, so `seed ^ index` derivation (the documented
/// per-block rule) never produces overlapping streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamLabel {
    QkdSymbols = 1,
    Pilots = 2,
    ShotNoise = 3,
    ElectronicNoise = 4,
    ExcessNoise = 5,
    PhaseNoise = 6,
    CalibShot = 7,
    CalibElectronic = 8,
    CalibPhase = 9,
    Misc = 10,
}

/// SplitMix64 finalizer; decorrelates seeds that differ in few bits.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a deterministic RNG for `(seed, label, lane)`.
///
/// `lane` distinguishes e.g. polarizations or chunks within one stream.
pub fn derive_rng(seed: u64, label: StreamLabel, lane: u64) -> ChaCha12Rng {
    let mixed = splitmix64(seed ^ splitmix64((label as u64) << 32 | lane));
    ChaCha12Rng::seed_from_u64(mixed)
}

/// Mean of a real slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance around the sample mean.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Population variance of the real parts around their mean.
pub fn variance_re(xs: &[Complex64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().map(|z| z.re).sum::<f64>() / xs.len() as f64;
    xs.iter().map(|z| (z.re - m) * (z.re - m)).sum::<f64>() / xs.len() as f64
}

/// Population variance of the imaginary parts around their mean.
pub fn variance_im(xs: &[Complex64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().map(|z| z.im).sum::<f64>() / xs.len() as f64;
    xs.iter().map(|z| (z.im - m) * (z.im - m)).sum::<f64>() / xs.len() as f64
}

/// Mean of |z|² over a complex slice.
pub fn mean_power(xs: &[Complex64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().map(|z| z.norm_sqr()).sum::<f64>() / xs.len() as f64
}
