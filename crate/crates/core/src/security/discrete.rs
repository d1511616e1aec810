//! Discrete-modulation Holevo bound.
//!
//! The correlation term of the effective two-mode covariance is anchored by
//! the quantum correlation of the modulated ensemble itself,
//! z0 = 2·Tr[√τ a √τ a†] with τ = Σ π_k |α_k⟩⟨α_k|, evaluated in a truncated
//! Fock basis. For a channel with effective transmittance derived from the
//! measured correlation c1, the covariance correlation is √T_eff·z0, which
//! reaches the thermal-state ceiling 2√(⟨n⟩(⟨n⟩+1)) only in the
//! Gaussian-modulation limit. This is what makes the key rate sensitive to
//! the shaping parameter at fixed V_A.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::gaussian::holevo_from_channel_output;
use super::{DetectorModel, SecurityError};
use crate::constellation::Constellation;

/// Ensemble geometry entering the discrete-modulation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteGeometry {
    /// Mean photon number ⟨n⟩ = Σπ|α|² (= V_A/2).
    pub mean_photons: f64,
    /// Fourth moment Σπ|α|⁴.
    pub fourth_moment: f64,
    /// Quantum correlation z0 = 2·Tr[√τ a √τ a†] of the ensemble.
    pub z0: f64,
}

impl DiscreteGeometry {
    /// Compute the geometry of a constellation, including the Fock-space z0.
    pub fn of(constellation: &Constellation) -> Self {
        let m = constellation.moments();
        let z0 = ensemble_quantum_correlation(constellation.points(), constellation.probs());
        Self {
            mean_photons: m.mean_photons,
            fourth_moment: m.fourth_moment,
            z0,
        }
    }

    /// Thermal-state ceiling 2√(⟨n⟩(⟨n⟩+1)) on z0.
    pub fn z0_ceiling(&self) -> f64 {
        2.0 * (self.mean_photons * (self.mean_photons + 1.0)).sqrt()
    }
}

/// z0 = 2·Tr[√τ a √τ a†] for τ = Σ π_k |α_k⟩⟨α_k| in a truncated Fock basis.
///
/// The constellation is symmetric under conjugation, so τ is real symmetric
/// and the computation stays in real arithmetic.
pub fn ensemble_quantum_correlation(points: &[Complex64], probs: &[f64]) -> f64 {
    let max_r2 = points.iter().map(|p| p.norm_sqr()).fold(0.0, f64::max);
    let n_max = ((max_r2 + 8.0 * max_r2.sqrt() + 25.0).ceil() as usize).min(240);
    let dim = n_max + 1;

    // Coherent-state coefficients ⟨m|α⟩ in log domain for stability.
    let mut log_fact = vec![0.0f64; dim];
    for m in 1..dim {
        log_fact[m] = log_fact[m - 1] + (m as f64).ln();
    }
    let mut tau = DMatrix::<f64>::zeros(dim, dim);
    let mut coeff = vec![Complex64::new(0.0, 0.0); dim];
    for (p, &q) in points.iter().zip(probs) {
        if q <= 0.0 {
            continue;
        }
        let r2 = p.norm_sqr();
        let (r, phi) = (p.norm(), p.arg());
        for m in 0..dim {
            let log_mag = -0.5 * r2 + m as f64 * r.max(1e-300).ln() - 0.5 * log_fact[m];
            let mag = if r == 0.0 && m > 0 { 0.0 } else { log_mag.exp() };
            coeff[m] = Complex64::from_polar(mag, m as f64 * phi);
        }
        for i in 0..dim {
            let ci = coeff[i];
            if ci.norm_sqr() * q < 1e-40 {
                continue;
            }
            for j in i..dim {
                // Imaginary parts cancel over the symmetric constellation.
                let v = q * (ci * coeff[j].conj()).re;
                tau[(i, j)] += v;
                if j != i {
                    tau[(j, i)] += v;
                }
            }
        }
    }

    // √τ via symmetric eigendecomposition, clamping rounding negatives.
    let eig = nalgebra::SymmetricEigen::new(tau);
    let sqrt_vals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    let u = &eig.eigenvectors;
    let mut sqrt_tau = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        if sqrt_vals[k] == 0.0 {
            continue;
        }
        let col = u.column(k);
        for i in 0..dim {
            let s = sqrt_vals[k] * col[i];
            if s == 0.0 {
                continue;
            }
            for j in 0..dim {
                sqrt_tau[(i, j)] += s * col[j];
            }
        }
    }

    // a lowers: ⟨m|a|n⟩ = √n δ_{m,n−1}. Tr[√τ a √τ aᵀ] computed directly:
    // (a √τ aᵀ)_{ij} = √(i+1)√(j+1)·√τ_{i+1,j+1}.
    let mut trace = 0.0;
    for i in 0..dim - 1 {
        for j in 0..dim - 1 {
            trace += sqrt_tau[(i, j)]
                * ((i + 1) as f64).sqrt()
                * ((j + 1) as f64).sqrt()
                * sqrt_tau[(j + 1, i + 1)];
        }
    }
    2.0 * trace
}

/// Holevo bound f(c1, c2, n_B) for a discretely modulated protocol, in bits
/// per symbol.
///
/// * `c1` — measured first-order correlation, E[Re(w1(α)* y)] with
///   w1 = α/√⟨n⟩ and y referred to the channel output; equals √(2T⟨n⟩) on a
///   Gaussian channel.
/// * `c2` — second-order correlation; retained for interface compatibility
///   and consistency checks, does not tighten the bound here.
/// * `n_b` — mean photon number of the channel output mode.
///
/// The effective covariance is [[(2⟨n⟩+1)I, Z σz],[Z σz, (2n_B+1)I]] with
/// Z = √T_eff·z0 and T_eff = c1²/(2⟨n⟩). Contracts: Z equals the Gaussian
/// correlation when the ensemble is thermal (z0 at its ceiling), and Z is
/// non-decreasing in c1 and independent of n_B.
pub fn holevo_discrete(
    c1: f64,
    _c2: f64,
    n_b: f64,
    geometry: &DiscreteGeometry,
    detector: DetectorModel,
) -> Result<f64, SecurityError> {
    if !(n_b >= 0.0) {
        return Err(SecurityError::InvalidParams(format!(
            "n_b must be >= 0, got {n_b}"
        )));
    }
    let n_mean = geometry.mean_photons;
    if n_mean <= 0.0 {
        return Err(SecurityError::InvalidParams(
            "constellation has zero mean photon number".into(),
        ));
    }
    let a = 2.0 * n_mean + 1.0;
    let b = 2.0 * n_b + 1.0;
    let t_eff = (c1.max(0.0) * c1.max(0.0)) / (2.0 * n_mean);
    let z = t_eff.sqrt() * geometry.z0;
    holevo_from_channel_output(a, b, z, detector)
}
