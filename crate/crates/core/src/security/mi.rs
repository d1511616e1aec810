//! Mutual information: Gaussian capacity bookkeeping and the exact discrete
//! constellation MI over a complex AWGN channel via Gauss–Hermite quadrature.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::constellation::Constellation;
use crate::util::{derive_rng, StreamLabel};

/// Heterodyne mutual information log2(1 + SNR) in bits per symbol, with
/// SNR = (ηT·V_A/2)/(1 + V_el + ξ_B). Two quadratures at half capacity each.
pub fn mutual_information(va: f64, t: f64, xi_b: f64, eta: f64, v_el: f64) -> f64 {
    let snr = snr_heterodyne(va, t, xi_b, eta, v_el);
    (1.0 + snr).log2()
}

/// Per-quadrature SNR of the heterodyne measurement.
pub fn snr_heterodyne(va: f64, t: f64, xi_b: f64, eta: f64, v_el: f64) -> f64 {
    (eta * t * va / 2.0) / (1.0 + v_el + xi_b)
}

/// Gauss–Hermite nodes and weights (physicists' convention, weight e^{−t²})
/// via the Golub–Welsch eigenproblem.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let w = std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, i)].powi(2);
            (node, w)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// log(Σ exp(xs)) with max subtraction.
fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Marginal amplitude levels and probabilities of one axis of a square grid.
///
/// Returns None when the joint distribution does not factorize.
fn axis_marginal(c: &Constellation) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut levels: Vec<f64> = c.points().iter().map(|p| p.re).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let side = levels.len();
    if side * side != c.points().len() {
        return None;
    }
    let mut marg = vec![0.0; side];
    for (p, &q) in c.points().iter().zip(c.probs()) {
        let i = levels
            .iter()
            .position(|&l| (l - p.re).abs() < 1e-12)?;
        marg[i] += q;
    }
    // Verify the product structure π(k,l) = π1(k)·π1(l).
    for (p, &q) in c.points().iter().zip(c.probs()) {
        let i = levels.iter().position(|&l| (l - p.re).abs() < 1e-12)?;
        let j = levels.iter().position(|&l| (l - p.im).abs() < 1e-12)?;
        if (q - marg[i] * marg[j]).abs() > 1e-9 * q.max(1e-12) {
            return None;
        }
    }
    Some((levels, marg))
}

/// Exact MI of one PAM axis over real AWGN with noise variance `sigma2`.
fn mi_pam_axis(levels: &[f64], probs: &[f64], sigma2: f64, nodes: usize) -> f64 {
    let (ts, ws) = gauss_hermite(nodes);
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let mut mi = 0.0;
    let mut exps = vec![0.0f64; levels.len()];
    for (k, (&xk, &pk)) in levels.iter().zip(probs).enumerate() {
        if pk <= 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for (&t, &w) in ts.iter().zip(&ws) {
            let n = (2.0 * sigma2).sqrt() * t;
            for (j, (&xj, &pj)) in levels.iter().zip(probs).enumerate() {
                let d = xk - xj + n;
                exps[j] = if pj > 0.0 {
                    pj.ln() + (n * n - d * d) / (2.0 * sigma2)
                } else {
                    f64::NEG_INFINITY
                };
            }
            let _ = k;
            acc += w * (-log_sum_exp(&exps) / std::f64::consts::LN_2);
        }
        mi += pk * inv_sqrt_pi * acc;
    }
    mi
}

/// MI of the discrete constellation over a complex AWGN channel at the given
/// SNR, in bits per symbol. Gauss–Hermite quadrature with `nodes` points per
/// axis (default callers use 64).
///
/// The square PCS grid factorizes into two independent PAM axes, which the
/// implementation exploits; non-product constellations fall back to the full
/// 2-D quadrature.
pub fn discrete_mutual_information(c: &Constellation, snr: f64) -> f64 {
    discrete_mutual_information_nodes(c, snr, 64)
}

pub fn discrete_mutual_information_nodes(c: &Constellation, snr: f64, nodes: usize) -> f64 {
    if snr <= 0.0 {
        return 0.0;
    }
    // Scale points so E|x|² = snr with complex noise variance 1.
    let scale = (snr / (c.va() / 2.0)).sqrt();
    if let Some((levels, probs)) = axis_marginal(c) {
        let levels: Vec<f64> = levels.iter().map(|l| l * scale).collect();
        return 2.0 * mi_pam_axis(&levels, &probs, 0.5, nodes);
    }
    discrete_mi_2d(c, snr, nodes)
}

/// Full 2-D quadrature (fallback and cross-check path).
pub fn discrete_mi_2d(c: &Constellation, snr: f64, nodes: usize) -> f64 {
    let scale = (snr / (c.va() / 2.0)).sqrt();
    let pts: Vec<Complex64> = c.points().iter().map(|p| p * scale).collect();
    let probs = c.probs();
    let (ts, ws) = gauss_hermite(nodes);
    let inv_pi = 1.0 / std::f64::consts::PI;
    let mut mi = 0.0;
    let mut exps = vec![0.0f64; pts.len()];
    for (k, &pk) in probs.iter().enumerate() {
        if pk <= 0.0 {
            continue;
        }
        let xk = pts[k];
        let mut acc = 0.0;
        for (&t1, &w1) in ts.iter().zip(&ws) {
            for (&t2, &w2) in ts.iter().zip(&ws) {
                // Per-axis noise variance 1/2 ⇒ n = t (GH weight e^{−t²}).
                let n = Complex64::new(t1, t2);
                let y = xk + n;
                for (j, &pj) in probs.iter().enumerate() {
                    let d = y - pts[j];
                    exps[j] = if pj > 0.0 {
                        pj.ln() + n.norm_sqr() - d.norm_sqr()
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                acc += w1 * w2 * (-log_sum_exp(&exps) / std::f64::consts::LN_2);
            }
        }
        mi += pk * inv_pi * acc;
    }
    mi
}

/// Monte Carlo MI estimate over the complex AWGN channel; the independent
/// oracle for the quadrature result. Deterministic for a fixed seed.
pub fn discrete_mi_monte_carlo(c: &Constellation, snr: f64, samples: usize, seed: u64) -> f64 {
    let scale = (snr / (c.va() / 2.0)).sqrt();
    let pts: Vec<Complex64> = c.points().iter().map(|p| p * scale).collect();
    let probs = c.probs().to_vec();
    let cumulative: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, &q| {
            *acc += q;
            Some(*acc)
        })
        .collect();
    let chunk = 65_536;
    let n_chunks = samples.div_ceil(chunk);
    let total: f64 = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = derive_rng(seed, StreamLabel::Misc, ci as u64);
            let m = chunk.min(samples - ci * chunk);
            let mut acc = 0.0;
            let mut exps = vec![0.0f64; pts.len()];
            for _ in 0..m {
                let u: f64 = rng.gen();
                let idx = cumulative.partition_point(|&cu| cu < u).min(pts.len() - 1);
                let nre: f64 = StandardNormal.sample(&mut rng);
                let nim: f64 = StandardNormal.sample(&mut rng);
                let n = Complex64::new(nre * (0.5f64).sqrt(), nim * (0.5f64).sqrt());
                let y = pts[idx] + n;
                for (j, &pj) in probs.iter().enumerate() {
                    let d = y - pts[j];
                    exps[j] = pj.ln() - d.norm_sqr();
                }
                acc += (-n.norm_sqr() - log_sum_exp(&exps)) / std::f64::consts::LN_2;
            }
            acc
        })
        .sum();
    total / samples as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_pcs_qam, build_with_target_va, ConstellationSpec};
    use approx::assert_relative_eq;

    #[test]
    fn gauss_hermite_reproduces_moments() {
        let (t, w) = gauss_hermite(64);
        // ∫ e^{−t²} t^{2m} dt = Γ(m + 1/2).
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let exact = [
            sqrt_pi,
            sqrt_pi / 2.0,
            3.0 * sqrt_pi / 4.0,
            15.0 * sqrt_pi / 8.0,
            105.0 * sqrt_pi / 16.0,
        ];
        for (m, &e) in exact.iter().enumerate() {
            let q: f64 = t
                .iter()
                .zip(&w)
                .map(|(&x, &wi)| wi * x.powi(2 * m as i32))
                .sum();
            assert_relative_eq!(q, e, max_relative = 1e-12);
        }
    }

    #[test]
    fn trivial_gaussian_mi_cases() {
        assert_eq!(mutual_information(7.11, 0.0, 0.0, 0.65, 0.1), 0.0);
        // SNR doubling identity.
        let s = snr_heterodyne(7.11, 0.6457, 0.0005, 0.65, 0.1);
        let i1 = (1.0 + s).log2();
        let i2 = (1.0 + 2.0 * s).log2();
        assert_relative_eq!(i2 - i1, ((1.0 + 2.0 * s) / (1.0 + s)).log2(), epsilon = 1e-14);
        // Closed-form evaluation cross-check at the 256-QAM / 9.5 km point.
        let xi = 0.132e-3;
        let snr = (0.65 * 10f64.powf(-0.19) * 7.11 / 2.0) / (1.0 + 0.1 + xi);
        assert_relative_eq!(
            mutual_information(7.11, 10f64.powf(-0.19), xi, 0.65, 0.1),
            (1.0 + snr).log2(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn discrete_mi_bounds() {
        let c = build_with_target_va(256, 0.0362, 7.11).unwrap();
        for snr in [0.1, 1.0, 5.0] {
            let mi = discrete_mutual_information(&c, snr);
            assert!(mi > 0.0);
            assert!(mi <= (1.0 + snr).log2() + 1e-9, "capacity bound at {snr}");
            assert!(mi <= c.moments().entropy_bits + 1e-9, "entropy bound");
        }
        assert!(discrete_mutual_information(&c, 1e-9) < 1e-6);
    }

    #[test]
    fn qpsk_saturates_at_two_bits() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 4,
            nu: 0.0,
            alpha0: 1.0,
        })
        .unwrap();
        let mi = discrete_mutual_information(&c, 1000.0);
        assert!(mi > 1.999, "mi = {mi}");
    }

    #[test]
    fn factorized_path_matches_full_2d() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 64,
            nu: 0.0749,
            alpha0: 2.0,
        })
        .unwrap();
        let fast = discrete_mutual_information_nodes(&c, 1.35, 48);
        let slow = discrete_mi_2d(&c, 1.35, 48);
        assert_relative_eq!(fast, slow, epsilon = 1e-10);
    }

    #[test]
    fn monte_carlo_oracle_agrees_small() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 64,
            nu: 0.0749,
            alpha0: 2.0,
        })
        .unwrap();
        let quad = discrete_mutual_information(&c, 1.35);
        let mc = discrete_mi_monte_carlo(&c, 1.35, 1_000_000, 11);
        // 1e6 samples: σ ≈ 1e-3 bits; 5σ band.
        assert!((quad - mc).abs() < 5e-3, "quad {quad} vs mc {mc}");
    }

    // The full-scale oracle from the operation contract: 256-QAM at
    // SNR = 1.35, 1e7 Monte Carlo samples, agreement within 1e-3 bits.
    // Heavy; runs in release builds only.
    #[test]
    #[cfg_attr(debug_assertions, ignore)]
    fn monte_carlo_oracle_full_scale() {
        let c = build_with_target_va(256, 0.0362, 7.11).unwrap();
        let quad = discrete_mutual_information(&c, 1.35);
        let mc = discrete_mi_monte_carlo(&c, 1.35, 10_000_000, 4);
        assert!((quad - mc).abs() < 1e-3, "quad {quad} vs mc {mc}");
    }
}
