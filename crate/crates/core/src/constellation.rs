//! Probabilistically shaped QAM constellations in shot-noise units.
//!
//! Points live on the standard QAM lattice α0·(k+il) with k, l odd integers,
//! and carry a discretized Gaussian probability distribution
//! π ∝ exp(−ν|α|²). The shaping parameter ν and the grid scale α0 together
//! fix the modulation variance V_A = 2·Σπ|α|².

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::util::{derive_rng, StreamLabel};

/// Supported QAM orders.
pub const VALID_ORDERS: [usize; 5] = [4, 16, 64, 256, 1024];

#[derive(Debug, Error, PartialEq)]
pub enum ConstellationError {
    #[error("unsupported QAM order {0}; expected one of 4/16/64/256/1024")]
    InvalidOrder(usize),
    #[error("shaping parameter nu must be >= 0, got {0}")]
    InvalidNu(f64),
    #[error("grid scale alpha0 must be > 0, got {0}")]
    InvalidAlpha0(f64),
    #[error("target modulation variance must be > 0, got {0}")]
    InvalidTargetVa(f64),
    #[error("sample count must be >= 1")]
    EmptySampleRequest,
}

/// Input parameters of a shaped QAM constellation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConstellationSpec {
    /// QAM order (4, 16, 64, 256 or 1024).
    pub order: usize,
    /// Shaping parameter ν ≥ 0 of the discretized Gaussian.
    pub nu: f64,
    /// Grid scale α0 > 0 in √SNU.
    pub alpha0: f64,
}

impl ConstellationSpec {
    pub fn validate(&self) -> Result<(), ConstellationError> {
        if !VALID_ORDERS.contains(&self.order) {
            return Err(ConstellationError::InvalidOrder(self.order));
        }
        if !(self.nu >= 0.0) {
            return Err(ConstellationError::InvalidNu(self.nu));
        }
        if !(self.alpha0 > 0.0) {
            return Err(ConstellationError::InvalidAlpha0(self.alpha0));
        }
        Ok(())
    }
}

/// A shaped QAM constellation: points, probabilities and derived V_A.
///
/// Immutable after construction; safe to share across block workers.
#[derive(Debug, Clone)]
pub struct Constellation {
    points: Vec<Complex64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    va: f64,
    spec: ConstellationSpec,
}

/// Moment summary used by the discrete-modulation security interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// Mean photon number ⟨n⟩ = Σπ|α|².
    pub mean_photons: f64,
    /// Second-moment magnitude |Σπ α²|; zero for symmetric grids.
    pub m2_mag: f64,
    /// Fourth moment Σπ|α|⁴.
    pub fourth_moment: f64,
    /// Shannon entropy of π in bits.
    pub entropy_bits: f64,
}

/// Odd-integer lattice coordinates for one axis of an order-m QAM grid.
fn axis_indices(order: usize) -> Vec<i32> {
    let side = (order as f64).sqrt().round() as i32;
    (0..side).map(|i| 2 * i - (side - 1)).collect()
}

/// Build a PCS QAM constellation with π ∝ exp(−ν|α|²).
pub fn build_pcs_qam(spec: ConstellationSpec) -> Result<Constellation, ConstellationError> {
    spec.validate()?;
    let axis = axis_indices(spec.order);
    let mut points = Vec::with_capacity(spec.order);
    let mut weights = Vec::with_capacity(spec.order);
    // Subtracting the minimum exponent keeps exp() in range for large ν·α0².
    let min_r2 = 2.0; // innermost point (±1, ±1)
    for &k in &axis {
        for &l in &axis {
            let p = Complex64::new(spec.alpha0 * k as f64, spec.alpha0 * l as f64);
            let r2 = p.norm_sqr();
            points.push(p);
            weights.push((-spec.nu * (r2 - spec.alpha0 * spec.alpha0 * min_r2)).exp());
        }
    }
    let norm: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / norm).collect();
    Ok(Constellation::from_parts(points, probs, spec))
}

impl Constellation {
    fn from_parts(points: Vec<Complex64>, probs: Vec<f64>, spec: ConstellationSpec) -> Self {
        let va = 2.0
            * points
                .iter()
                .zip(&probs)
                .map(|(p, q)| q * p.norm_sqr())
                .sum::<f64>();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &q in &probs {
            acc += q;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self {
            points,
            probs,
            cumulative,
            va,
            spec,
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Modulation variance V_A = 2·Σπ|α|² in SNU.
    pub fn va(&self) -> f64 {
        self.va
    }

    pub fn spec(&self) -> ConstellationSpec {
        self.spec
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// Rescale all points by one positive factor so that V_A hits `target_va`.
    ///
    /// Probabilities are unchanged; only α0 moves.
    pub fn rescale_to_va(&self, target_va: f64) -> Result<Constellation, ConstellationError> {
        if !(target_va > 0.0) {
            return Err(ConstellationError::InvalidTargetVa(target_va));
        }
        let scale = (target_va / self.va).sqrt();
        let points: Vec<Complex64> = self.points.iter().map(|p| p * scale).collect();
        let spec = ConstellationSpec {
            alpha0: self.spec.alpha0 * scale,
            ..self.spec
        };
        Ok(Constellation::from_parts(points, self.probs.clone(), spec))
    }

    /// Draw n i.i.d. symbols by inverse-CDF lookup; deterministic per seed.
    pub fn sample_symbols(&self, n: usize, seed: u64) -> Result<Vec<Complex64>, ConstellationError> {
        if n == 0 {
            return Err(ConstellationError::EmptySampleRequest);
        }
        let mut rng = derive_rng(seed, StreamLabel::QkdSymbols, 0);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.gen::<f64>();
            let idx = self
                .cumulative
                .partition_point(|&c| c < u)
                .min(self.points.len() - 1);
            out.push(self.points[idx]);
        }
        Ok(out)
    }

    /// Exact moment sums over all points.
    pub fn moments(&self) -> Moments {
        let mut n_mean = 0.0;
        let mut m2 = Complex64::new(0.0, 0.0);
        let mut m4 = 0.0;
        let mut entropy = 0.0;
        for (p, &q) in self.points.iter().zip(&self.probs) {
            let r2 = p.norm_sqr();
            n_mean += q * r2;
            m2 += q * p * p;
            m4 += q * r2 * r2;
            if q > 0.0 {
                entropy -= q * q.log2();
            }
        }
        Moments {
            mean_photons: n_mean,
            m2_mag: m2.norm(),
            fourth_moment: m4,
            entropy_bits: entropy,
        }
    }

    /// Text table `re im prob`, one point per line, for plotting.
    pub fn to_table(&self) -> String {
        let mut s = String::with_capacity(self.points.len() * 48);
        s.push_str("# re_sqrt_snu im_sqrt_snu probability\n");
        for (p, q) in self.points.iter().zip(&self.probs) {
            s.push_str(&format!("{:.12e} {:.12e} {:.12e}\n", p.re, p.im, q));
        }
        s
    }
}

/// Build a constellation with fixed ν whose α0 is solved so V_A = `target_va`.
///
/// V_A is strictly increasing in α0 at fixed ν, so bisection converges.
pub fn build_with_target_va(
    order: usize,
    nu: f64,
    target_va: f64,
) -> Result<Constellation, ConstellationError> {
    if !(target_va > 0.0) {
        return Err(ConstellationError::InvalidTargetVa(target_va));
    }
    // Bracket: at alpha0 = sqrt(target_va/2)/1, uniform case V_A >= target even
    // for nu = 0 when scaled past the mean radius; expand until bracketed.
    let mut lo = 1e-6;
    let mut hi = (target_va / 2.0).sqrt().max(1e-3);
    let va_of = |a0: f64| -> f64 {
        build_pcs_qam(ConstellationSpec {
            order,
            nu,
            alpha0: a0,
        })
        .map(|c| c.va())
        .unwrap_or(f64::NAN)
    };
    // Validate order/nu once up front.
    ConstellationSpec {
        order,
        nu,
        alpha0: hi,
    }
    .validate()?;
    while va_of(hi) < target_va {
        hi *= 2.0;
        if hi > 1e6 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if va_of(mid) < target_va {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < 1e-14 {
            break;
        }
    }
    let c = build_pcs_qam(ConstellationSpec {
        order,
        nu,
        alpha0: 0.5 * (lo + hi),
    })?;
    // One exact rescale to absorb the last bisection digit.
    c.rescale_to_va(target_va)
}

/// Result of the shaping-parameter optimization.
#[derive(Debug, Clone, Copy)]
pub struct NuOptimum {
    pub nu: f64,
    pub rate: f64,
    /// False when the rate is non-positive over the whole search range.
    pub positive_rate: bool,
}

/// Search range for ν.
pub const NU_SEARCH_RANGE: (f64, f64) = (1e-4, 0.3);

/// Find the ν maximizing `rate_fn` at fixed V_A (α0 re-solved per candidate).
///
/// Coarse grid bracketing followed by golden-section refinement to relative
/// tolerance 1e-3 on ν. The rate surface is observed unimodal in ν; the grid
/// stage protects the bracket.
pub fn optimize_nu<F>(
    order: usize,
    target_va: f64,
    mut rate_fn: F,
) -> Result<NuOptimum, ConstellationError>
where
    F: FnMut(&Constellation) -> f64,
{
    let (lo, hi) = NU_SEARCH_RANGE;
    let eval = |nu: f64, rate_fn: &mut F| -> Result<f64, ConstellationError> {
        let c = build_with_target_va(order, nu, target_va)?;
        Ok(rate_fn(&c))
    };
    // Coarse bracket on a log-spaced grid.
    let n_grid = 25;
    let mut best_i = 0;
    let mut best_r = f64::NEG_INFINITY;
    let mut grid = Vec::with_capacity(n_grid);
    for i in 0..n_grid {
        let t = i as f64 / (n_grid - 1) as f64;
        let nu = lo * (hi / lo).powf(t);
        let r = eval(nu, &mut rate_fn)?;
        if r > best_r {
            best_r = r;
            best_i = i;
        }
        grid.push(nu);
    }
    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(n_grid - 1)];
    // Golden-section refinement.
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = eval(x1, &mut rate_fn)?;
    let mut f2 = eval(x2, &mut rate_fn)?;
    while (b - a) > 1e-3 * b.abs().max(1e-6) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = eval(x2, &mut rate_fn)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = eval(x1, &mut rate_fn)?;
        }
    }
    let nu = 0.5 * (a + b);
    let rate = eval(nu, &mut rate_fn)?;
    let rate = rate.max(f1).max(f2).max(best_r);
    Ok(NuOptimum {
        nu,
        rate,
        positive_rate: rate > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_invalid_order() {
        let err = build_pcs_qam(ConstellationSpec {
            order: 100,
            nu: 0.1,
            alpha0: 1.0,
        })
        .unwrap_err();
        assert_eq!(err, ConstellationError::InvalidOrder(100));
    }

    #[test]
    fn uniform_qam_when_nu_zero() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 64,
            nu: 0.0,
            alpha0: 1.0,
        })
        .unwrap();
        for &q in c.probs() {
            assert_relative_eq!(q, 1.0 / 64.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn probabilities_normalized_and_symmetric() {
        // Fig. 1-style surface: 64 points, nu = 0.0749, alpha0 = 2.
        let c = build_pcs_qam(ConstellationSpec {
            order: 64,
            nu: 0.0749,
            alpha0: 2.0,
        })
        .unwrap();
        let total: f64 = c.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // 8-fold dihedral symmetry: probability depends only on |α|².
        let lookup = |k: f64, l: f64| -> f64 {
            let target = Complex64::new(2.0 * k, 2.0 * l);
            c.points()
                .iter()
                .zip(c.probs())
                .find(|(p, _)| (*p - target).norm() < 1e-12)
                .map(|(_, &q)| q)
                .unwrap()
        };
        assert_relative_eq!(lookup(3.0, 5.0), lookup(-3.0, 5.0), max_relative = 1e-12);
        assert_relative_eq!(lookup(3.0, 5.0), lookup(5.0, 3.0), max_relative = 1e-12);
        // Inner points are the most likely ones.
        assert!(lookup(1.0, 1.0) > lookup(7.0, 7.0));
    }

    #[test]
    fn va_matches_direct_sum_oracle() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 256,
            nu: 0.0294,
            alpha0: 2.0,
        })
        .unwrap();
        // Independent direct sum over all 256 points.
        let mut acc = 0.0;
        for (p, &q) in c.points().iter().zip(c.probs()) {
            acc += q * (p.re * p.re + p.im * p.im);
        }
        assert_relative_eq!(c.va(), 2.0 * acc, max_relative = 1e-14);
    }

    #[test]
    fn rescale_identity_and_quadratic_law() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 64,
            nu: 0.05,
            alpha0: 1.3,
        })
        .unwrap();
        let same = c.rescale_to_va(c.va()).unwrap();
        for (a, b) in c.points().iter().zip(same.points()) {
            assert!((a - b).norm() < 1e-12);
        }
        let quad = c.rescale_to_va(4.0 * c.va()).unwrap();
        for (a, b) in c.points().iter().zip(quad.points()) {
            assert_relative_eq!(b.norm(), 2.0 * a.norm(), max_relative = 1e-12);
        }
        assert_relative_eq!(quad.va(), 4.0 * c.va(), epsilon = 1e-9);
    }

    #[test]
    fn rescale_hits_table_row_va() {
        // 256-QAM, nu = 0.0362 rescaled to V_A = 7.11: alpha0 must solve
        // 2Σπ|α|² = 7.11. Bisection oracle cross-check.
        let c = build_with_target_va(256, 0.0362, 7.11).unwrap();
        assert!((c.va() - 7.11).abs() < 1e-9);
        let mut lo = 1e-4;
        let mut hi = 10.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let v = build_pcs_qam(ConstellationSpec {
                order: 256,
                nu: 0.0362,
                alpha0: mid,
            })
            .unwrap()
            .va();
            if v < 7.11 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(c.spec().alpha0, 0.5 * (lo + hi), max_relative = 1e-9);
    }

    #[test]
    fn sampling_uniform_case_within_multinomial_bounds() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 64,
            nu: 0.0,
            alpha0: 1.0,
        })
        .unwrap();
        let n = 1_000_000;
        let symbols = c.sample_symbols(n, 42).unwrap();
        let mut counts = vec![0usize; 64];
        for s in &symbols {
            let idx = c
                .points()
                .iter()
                .position(|p| (p - s).norm() < 1e-12)
                .unwrap();
            counts[idx] += 1;
        }
        // 4σ multinomial bounds around n/64.
        let p = 1.0 / 64.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for &cnt in &counts {
            assert!((cnt as f64 - n as f64 * p).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn sampling_deterministic_for_fixed_seed() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 256,
            nu: 0.03,
            alpha0: 0.4,
        })
        .unwrap();
        let a = c.sample_symbols(10_000, 7).unwrap();
        let b = c.sample_symbols(10_000, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampled_mean_power_within_5_sigma() {
        // PCS 256-QAM: empirical mean power within 5σ of V_A/2; the σ comes
        // from the per-draw variance of |α|² under π (multinomial oracle).
        let c = build_with_target_va(256, 0.0362, 7.11).unwrap();
        let n = 1_000_000;
        let symbols = c.sample_symbols(n, 3).unwrap();
        let mean_pow: f64 = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
        let m = c.moments();
        let var_r2 = c
            .points()
            .iter()
            .zip(c.probs())
            .map(|(p, &q)| q * (p.norm_sqr() - m.mean_photons).powi(2))
            .sum::<f64>();
        let sigma = (var_r2 / n as f64).sqrt();
        assert!((mean_pow - c.va() / 2.0).abs() < 5.0 * sigma);
    }

    #[test]
    fn moments_uniform_4qam() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 4,
            nu: 0.0,
            alpha0: 1.0,
        })
        .unwrap();
        let m = c.moments();
        assert_relative_eq!(m.mean_photons, 2.0, max_relative = 1e-14);
        assert!(m.m2_mag < 1e-14);
        assert_relative_eq!(m.entropy_bits, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn entropy_matches_direct_sum_oracle() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 64,
            nu: 0.0749,
            alpha0: 2.0,
        })
        .unwrap();
        let h_direct: f64 = c
            .probs()
            .iter()
            .filter(|&&q| q > 0.0)
            .map(|&q| -q * q.log2())
            .sum();
        assert_relative_eq!(c.moments().entropy_bits, h_direct, max_relative = 1e-14);
    }

    #[test]
    fn va_monotone_in_alpha0_and_nu() {
        let base = ConstellationSpec {
            order: 64,
            nu: 0.05,
            alpha0: 1.0,
        };
        let v0 = build_pcs_qam(base).unwrap().va();
        let bigger_a = build_pcs_qam(ConstellationSpec {
            alpha0: 1.2,
            ..base
        })
        .unwrap()
        .va();
        let bigger_nu = build_pcs_qam(ConstellationSpec { nu: 0.08, ..base }).unwrap().va();
        assert!(bigger_a > v0);
        assert!(bigger_nu < v0);
    }

    #[test]
    fn large_nu_concentrates_on_inner_points() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 256,
            nu: 10.0,
            alpha0: 1.0,
        })
        .unwrap();
        let inner: f64 = c
            .points()
            .iter()
            .zip(c.probs())
            .filter(|(p, _)| p.norm_sqr() < 2.0 * 1.0 + 1e-9)
            .map(|(_, &q)| q)
            .sum();
        assert!(inner > 0.9999, "inner mass {inner}");
    }

    #[test]
    fn table_export_roundtrips_probabilities() {
        let c = build_pcs_qam(ConstellationSpec {
            order: 16,
            nu: 0.1,
            alpha0: 0.8,
        })
        .unwrap();
        let table = c.to_table();
        let mut total = 0.0;
        for line in table.lines().skip(1) {
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().unwrap())
                .collect();
            assert_eq!(cols.len(), 3);
            total += cols[2];
        }
        assert!((total - 1.0).abs() < 1e-9);
    }
}
