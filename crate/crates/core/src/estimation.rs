//! Per-block channel parameter estimation: the Gaussian-channel pair
//! (T̂, ξ̂_B), the discrete-modulation triple (ĉ1, ĉ2, n̂_B), and worst-case
//! finite-size bounds at a chosen confidence level.
//!
//! Alice symbols α and Bob symbols b are both in √SNU; Re b and Im b are the
//! measured q and p quadratures, so the linear model is b = ĝ·u + z with
//! u = 2α and per-quadrature noise variance σ²_z = 1 + V_el + ξ_B.

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("alice and bob symbol streams have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("block too short for estimation: {0} symbols")]
    BlockTooShort(usize),
    #[error("confidence parameter must be in (0, 0.5), got {0}")]
    InvalidEpsilon(f64),
}

/// Minimum block length accepted by the estimators.
pub const MIN_BLOCK: usize = 1_000;

/// Point estimates and per-sample spreads for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEstimate {
    /// Number of paired symbols.
    pub n: usize,
    /// Quadrature gain estimate of the model b = g·u + z.
    pub g_hat: f64,
    /// Σ|u|² of the block (u = 2α).
    pub sum_u2: f64,
    /// Estimated channel transmittance T̂ = 2ĝ²/η.
    pub t_hat: f64,
    /// Mean per-quadrature variance of Bob's symbols.
    pub v_b: f64,
    /// Excess noise at Bob per Eq.-(3) bookkeeping.
    pub xi_b_hat: f64,
    /// Residual per-quadrature noise variance σ̂²_z = V̂_B − ĝ²·V_A.
    pub sigma_z2: f64,
    /// Block modulation variance V_A = 2·mean|α|².
    pub va_block: f64,
    /// First-order correlation ĉ1 (channel-output referred).
    pub c1_hat: f64,
    /// Second-order correlation ĉ2 (channel-output referred).
    pub c2_hat: f64,
    /// Mean photon number of the channel output mode.
    pub n_b_hat: f64,
    /// Per-sample standard deviations of the correlation estimators.
    pub sigma_c1: f64,
    pub sigma_c2: f64,
    pub sigma_nb: f64,
    /// Ensemble moments used by the discrete estimators.
    pub mean_photons: f64,
    pub fourth_moment: f64,
    /// Detector constants the referrals used.
    pub eta: f64,
    pub v_el: f64,
}

/// Worst-case bounds at confidence ε_pe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCaseBounds {
    pub epsilon_pe: f64,
    pub z_quantile: f64,
    pub g_min: f64,
    pub t_min: f64,
    pub xi_b_max: f64,
    pub c1_min: f64,
    pub c2_min: f64,
    pub n_b_max: f64,
}

/// One-sided standard-normal quantile z with Q(z) = epsilon, Newton-polished
/// on the tail for accuracy at tiny epsilon.
pub fn normal_upper_quantile(epsilon: f64) -> Result<f64, EstimationError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(EstimationError::InvalidEpsilon(epsilon));
    }
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    let mut z = n.inverse_cdf(1.0 - epsilon);
    // Newton refinement on Q(z) = erfc(z/√2)/2 = ε.
    for _ in 0..4 {
        let q = statrs::function::erf::erfc(z / std::f64::consts::SQRT_2) / 2.0;
        let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf == 0.0 {
            break;
        }
        z += (q - epsilon) / pdf;
    }
    Ok(z)
}

/// Gaussian-channel estimators (T̂, ξ̂_B, V̂_B) plus the discrete triple
/// (ĉ1, ĉ2, n̂_B), computed in one pass over the paired block.
///
/// `mean_photons` and `fourth_moment` are the ensemble moments of the
/// transmitted constellation (they normalize the correlation weights).
pub fn estimate_block(
    alice: &[Complex64],
    bob: &[Complex64],
    eta: f64,
    v_el: f64,
    mean_photons: f64,
    fourth_moment: f64,
) -> Result<BlockEstimate, EstimationError> {
    if alice.len() != bob.len() {
        return Err(EstimationError::LengthMismatch(alice.len(), bob.len()));
    }
    let n = alice.len();
    if n < MIN_BLOCK {
        return Err(EstimationError::BlockTooShort(n));
    }
    let nf = n as f64;
    let sqrt_eta = eta.sqrt();
    let w1_norm = mean_photons.sqrt();
    let w2_norm = fourth_moment.sqrt();

    let mut sum_u2 = 0.0;
    let mut corr_ub = 0.0;
    let mut sum_re2 = 0.0;
    let mut sum_im2 = 0.0;
    let mut sum_re = 0.0;
    let mut sum_im = 0.0;
    let mut sum_a2 = 0.0;
    let mut s_c1 = 0.0;
    let mut s_c1_sq = 0.0;
    let mut s_c2 = 0.0;
    let mut s_c2_sq = 0.0;
    let mut s_nb = 0.0;
    let mut s_nb_sq = 0.0;
    for (a, b) in alice.iter().zip(bob) {
        let u = 2.0 * a;
        sum_u2 += u.norm_sqr();
        corr_ub += (u.conj() * b).re;
        sum_re += b.re;
        sum_im += b.im;
        sum_re2 += b.re * b.re;
        sum_im2 += b.im * b.im;
        sum_a2 += a.norm_sqr();
        // Channel-output referral: y = b/√η.
        let y = b / sqrt_eta;
        let t1 = (a.conj() * y).re / w1_norm;
        s_c1 += t1;
        s_c1_sq += t1 * t1;
        let t2 = ((a * a).conj() * (y * y)).re / w2_norm;
        s_c2 += t2;
        s_c2_sq += t2 * t2;
        let tn = (b.norm_sqr() - 2.0 - 2.0 * v_el) / (2.0 * eta);
        s_nb += tn;
        s_nb_sq += tn * tn;
    }
    let g_hat = corr_ub / sum_u2;
    let t_hat = 2.0 * g_hat * g_hat / eta;
    let var_re = sum_re2 / nf - (sum_re / nf).powi(2);
    let var_im = sum_im2 / nf - (sum_im / nf).powi(2);
    let v_b = 0.5 * (var_re + var_im);
    let va_block = 2.0 * sum_a2 / nf;
    let xi_b_hat = v_b - 1.0 - v_el - g_hat * g_hat * va_block;
    let sigma_z2 = (v_b - g_hat * g_hat * va_block).max(1e-12);
    let c1_hat = s_c1 / nf;
    let c2_hat = s_c2 / nf;
    let n_b_hat = s_nb / nf;
    let sigma_c1 = (s_c1_sq / nf - c1_hat * c1_hat).max(0.0).sqrt();
    let sigma_c2 = (s_c2_sq / nf - c2_hat * c2_hat).max(0.0).sqrt();
    let sigma_nb = (s_nb_sq / nf - n_b_hat * n_b_hat).max(0.0).sqrt();
    Ok(BlockEstimate {
        n,
        g_hat,
        sum_u2,
        t_hat,
        v_b,
        xi_b_hat,
        sigma_z2,
        va_block,
        c1_hat,
        c2_hat,
        n_b_hat,
        sigma_c1,
        sigma_c2,
        sigma_nb,
        mean_photons,
        fourth_moment,
        eta,
        v_el,
    })
}

/// Worst-case estimators at confidence ε_pe, Gaussian sampling distributions.
///
/// The bound directions follow the security accounting: transmittance and
/// correlations are lowered, noise and photon number are raised.
pub fn worst_case_bounds(
    est: &BlockEstimate,
    epsilon_pe: f64,
) -> Result<WorstCaseBounds, EstimationError> {
    worst_case_bounds_at(est, epsilon_pe, est.n)
}

/// Worst-case bounds evaluated as if the block had `n_eff` symbols (the
/// per-sample spreads stay those measured on the block).
pub fn worst_case_bounds_at(
    est: &BlockEstimate,
    epsilon_pe: f64,
    n_eff: usize,
) -> Result<WorstCaseBounds, EstimationError> {
    let z = normal_upper_quantile(epsilon_pe)?;
    let nf = n_eff as f64;
    let sum_u2_eff = est.sum_u2 * nf / est.n as f64;
    let g_min = (est.g_hat - z * (est.sigma_z2 / sum_u2_eff).sqrt()).max(0.0);
    let t_min = 2.0 * g_min * g_min / est.eta;
    let xi_b_max = est.xi_b_hat + z * est.sigma_z2 * (2.0 / (2.0 * nf)).sqrt();
    let c1_min = est.c1_hat - z * est.sigma_c1 / nf.sqrt();
    let c2_min = est.c2_hat - z * est.sigma_c2 / nf.sqrt();
    let n_b_max = est.n_b_hat + z * est.sigma_nb / nf.sqrt();
    Ok(WorstCaseBounds {
        epsilon_pe,
        z_quantile: z,
        g_min,
        t_min,
        xi_b_max,
        c1_min,
        c2_min,
        n_b_max,
    })
}
