//! Finite-size secret key rates g(T, ξ_B) and f(c1, c2, n_B), the optimal
//! modulation variance, and distance sweeps.

use serde::Serialize;

use super::discrete::{holevo_discrete, DiscreteGeometry};
use super::gaussian::holevo_gaussian;
use super::mi::{discrete_mutual_information, mutual_information};
use super::{DetectorModel, RateParams, SecurityError};
use crate::constellation::Constellation;
use crate::estimation::{worst_case_bounds_at, BlockEstimate, EstimationError};

/// Which Holevo route enters the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RateMode {
    /// g(T̂_min, ξ̂_B,max) through the Gaussian-channel covariance.
    Gaussian,
    /// f(ĉ1_min, ĉ2_min, n̂_B,max) through the discrete-modulation covariance.
    Discrete,
}

/// Outcome of one secret-key-rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub i_ab: f64,
    pub chi: f64,
    pub delta_n: f64,
    /// r = β·I_AB − χ − Δ(N) before clamping.
    pub rate_raw: f64,
    /// max(0, r) in bits per QKD symbol.
    pub rate_bits_per_symbol: f64,
    /// max(0, r) × symbol_rate × qkd_fraction.
    pub skr_bps: f64,
    /// Worst-case inputs that entered χ.
    pub t_worst: f64,
    pub xi_worst: f64,
    pub c1_worst: f64,
    pub n_b_worst: f64,
}

/// Finite-size penalty Δ(N) = 7·√(log2(2/ε̄)/N) + (2/N)·log2(1/ε_PA) with the
/// declared split ε̄ = ε_PA = ε/4.
pub fn finite_size_delta(n: usize, epsilon: f64) -> f64 {
    let eps_bar = epsilon / 4.0;
    let eps_pa = epsilon / 4.0;
    7.0 * ((2.0 / eps_bar).log2() / n as f64).sqrt() + (2.0 / n as f64) * (1.0 / eps_pa).log2()
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RateError {
    #[error(transparent)]
    Security(#[from] SecurityError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error("discrete rate mode requires the constellation geometry")]
    MissingGeometry,
}

/// Finite-size secret key rate from a block estimate.
///
/// Worst-case bounds are evaluated at the RateParams block size (the
/// deployment accounting), with the per-sample spreads measured on the
/// block. I_AB uses the Gaussian capacity of the measured SNR by default;
/// `constellation` switches it to the exact discrete MI when provided
/// together with `discrete_mi = true`.
pub fn secret_key_rate(
    est: &BlockEstimate,
    params: &RateParams,
    mode: RateMode,
    geometry: Option<&DiscreteGeometry>,
    discrete_mi_constellation: Option<&Constellation>,
) -> Result<RateReport, RateError> {
    params.validate()?;
    let bounds = worst_case_bounds_at(est, params.epsilon_pe(), params.block_size)?;
    let snr = (est.g_hat * est.g_hat * est.va_block / est.sigma_z2).max(0.0);
    let i_ab = match discrete_mi_constellation {
        Some(c) => discrete_mutual_information(c, snr),
        None => (1.0 + snr).log2(),
    };
    let chi = match mode {
        RateMode::Gaussian => holevo_gaussian(
            est.va_block,
            bounds.t_min.min(1.0),
            bounds.xi_b_max.max(0.0),
            params.detector,
        )?,
        RateMode::Discrete => {
            let geometry = geometry.ok_or(RateError::MissingGeometry)?;
            holevo_discrete(
                bounds.c1_min.max(0.0),
                bounds.c2_min,
                bounds.n_b_max.max(0.0),
                geometry,
                params.detector,
            )?
        }
    };
    let delta_n = finite_size_delta(params.block_size, params.epsilon);
    let rate_raw = params.beta * i_ab - chi - delta_n;
    let rate = rate_raw.max(0.0);
    Ok(RateReport {
        i_ab,
        chi,
        delta_n,
        rate_raw,
        rate_bits_per_symbol: rate,
        skr_bps: rate * params.symbol_rate * params.qkd_fraction,
        t_worst: bounds.t_min,
        xi_worst: bounds.xi_b_max,
        c1_worst: bounds.c1_min,
        n_b_worst: bounds.n_b_max,
    })
}

/// Analytic block estimate for the pure computation path: the sampling
/// spreads are evaluated from the channel model instead of data.
///
/// Used by the Table-I reproduction and distance sweeps, where (V_A, T, ξ_B)
/// are given rather than measured.
pub fn analytic_block_estimate(
    constellation: &Constellation,
    t: f64,
    xi_b: f64,
    detector: DetectorModel,
    n: usize,
) -> BlockEstimate {
    let eta = detector.eta();
    let v_el = detector.v_el();
    let m = constellation.moments();
    let va = constellation.va();
    let g = (eta * t / 2.0).sqrt();
    let sigma_z2 = 1.0 + v_el + xi_b;
    let n_mean = m.mean_photons;
    let m4 = m.fourth_moment;
    // y = b/√η = √(2T)·α + z_y with per-quadrature Var(z_y) = σ_z²/η.
    let s2 = sigma_z2 / eta;
    let var_r2 = (m4 - n_mean * n_mean).max(0.0);
    let sigma_c1 = ((2.0 * t * var_r2 + n_mean * s2) / n_mean).max(0.0).sqrt();
    // n_i = (|b|² − 2 − 2V_el)/(2η) with b = √(2ηT)α + z_b.
    let var_b2 = 4.0 * eta * eta * t * t * var_r2
        + 8.0 * eta * t * sigma_z2 * n_mean
        + 4.0 * sigma_z2 * sigma_z2;
    let sigma_nb = var_b2.max(0.0).sqrt() / (2.0 * eta);
    // t2 = Re(w2*·y²): fourth-to-eighth moment bookkeeping.
    let (m6, m8) = constellation
        .points()
        .iter()
        .zip(constellation.probs())
        .fold((0.0, 0.0), |(a6, a8), (p, &q)| {
            let r2 = p.norm_sqr();
            (a6 + q * r2 * r2 * r2, a8 + q * r2 * r2 * r2 * r2)
        });
    let sigma_c2 = ((4.0 * t * t * (m8 - m4 * m4) + 8.0 * t * m6 * s2 + 4.0 * s2 * s2) / m4)
        .max(0.0)
        .sqrt();
    BlockEstimate {
        n,
        g_hat: g,
        sum_u2: n as f64 * 2.0 * va,
        t_hat: t,
        v_b: 1.0 + eta * t * va / 2.0 + v_el + xi_b,
        xi_b_hat: xi_b,
        sigma_z2,
        va_block: va,
        c1_hat: (2.0 * t * n_mean).sqrt(),
        c2_hat: 2.0 * t * m4.sqrt(),
        n_b_hat: t * n_mean + xi_b / eta,
        sigma_c1,
        sigma_c2,
        sigma_nb,
        mean_photons: n_mean,
        fourth_moment: m4,
        eta,
        v_el,
    }
}

/// Asymptotic Gaussian rate β·I_AB − χ at point values (no finite-size
/// penalty, no worst case); the Fig.-5 comparison curve.
pub fn asymptotic_gaussian_rate(
    va: f64,
    t: f64,
    xi_b: f64,
    params: &RateParams,
) -> Result<f64, SecurityError> {
    let eta = params.detector.eta();
    let v_el = params.detector.v_el();
    let i_ab = mutual_information(va, t, xi_b, eta, v_el);
    let chi = holevo_gaussian(va, t, xi_b, params.detector)?;
    Ok(params.beta * i_ab - chi)
}

/// V_A maximizing the asymptotic Gaussian rate, golden section on [0.5, 30]
/// to relative tolerance 1e-3. Returns the argmax even when the rate is
/// non-positive everywhere.
pub fn optimal_va(t: f64, xi_b: f64, params: &RateParams) -> Result<f64, SecurityError> {
    let (mut a, mut b) = (0.5_f64, 30.0_f64);
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = asymptotic_gaussian_rate(x1, t, xi_b, params)?;
    let mut f2 = asymptotic_gaussian_rate(x2, t, xi_b, params)?;
    while (b - a) > 1e-3 * b {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = asymptotic_gaussian_rate(x2, t, xi_b, params)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = asymptotic_gaussian_rate(x1, t, xi_b, params)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Fiber attenuation model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FiberSpec {
    pub atten_db_per_km: f64,
}

impl FiberSpec {
    pub const SMF28: FiberSpec = FiberSpec {
        atten_db_per_km: 0.2,
    };
    pub const EX3000: FiberSpec = FiberSpec {
        atten_db_per_km: 0.172,
    };

    pub fn transmittance(&self, length_km: f64) -> f64 {
        10f64.powf(-self.atten_db_per_km * length_km / 10.0)
    }
}

/// One row of a distance sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DistancePoint {
    pub distance_km: f64,
    pub atten_db: f64,
    /// Asymptotic Gaussian SKR at the optimal V_A, in bits/s.
    pub skr_asymptotic_gaussian_bps: f64,
    /// Finite-size discrete-modulation SKR at the given constellation.
    pub skr_finite_discrete_bps: f64,
}

/// Sweep SKR over distance: the asymptotic-Gaussian comparison curve at
/// optimal V_A plus the finite-size discrete rate of the given modulation.
pub fn distance_sweep(
    fiber: FiberSpec,
    xi_b: f64,
    params: &RateParams,
    constellation: &Constellation,
    geometry: &DiscreteGeometry,
    distances_km: &[f64],
) -> Result<Vec<DistancePoint>, RateError> {
    let mut out = Vec::with_capacity(distances_km.len());
    for &d in distances_km {
        let t = fiber.transmittance(d);
        let va_star = optimal_va(t, xi_b, params)?;
        let r_asym = asymptotic_gaussian_rate(va_star, t, xi_b, params)?.max(0.0);
        let est = analytic_block_estimate(constellation, t, xi_b, params.detector, params.block_size);
        let fin = secret_key_rate(&est, params, RateMode::Discrete, Some(geometry), None)?;
        out.push(DistancePoint {
            distance_km: d,
            atten_db: fiber.atten_db_per_km * d,
            skr_asymptotic_gaussian_bps: r_asym * params.symbol_rate * params.qkd_fraction,
            skr_finite_discrete_bps: fin.skr_bps,
        });
    }
    Ok(out)
}

/// One reproduced operating point of the published results table.
#[derive(Debug, Clone, Serialize)]
pub struct TableOneRow {
    pub fiber_label: &'static str,
    pub length_km: f64,
    pub modulation: &'static str,
    pub order: usize,
    pub nu: f64,
    pub va_snu: f64,
    pub xi_b_msnu: f64,
    pub skr_published_mbps: f64,
    pub skr_computed_mbps: f64,
}

/// The four published operating points.
pub const TABLE_ONE_POINTS: [(&str, f64, f64, usize, f64, f64, f64, f64); 4] = [
    // (fiber, km, db/km, order, nu, va, xi_b mSNU, published Mbps)
    ("SMF-28", 9.5, 0.2, 64, 0.0688, 5.32, 0.197, 60.2),
    ("SMF-28", 9.5, 0.2, 256, 0.0362, 7.11, 0.132, 91.8),
    ("EX3000", 25.0, 0.172, 64, 0.0460, 4.20, 1.170, 0.0),
    ("EX3000", 25.0, 0.172, 256, 0.0380, 6.53, 0.900, 24.0),
];

/// Reproduce the published table through the computation path: the
/// finite-size discrete-modulation rate at each stated operating point.
pub fn table_one_rows(params: &RateParams) -> Result<Vec<TableOneRow>, RateError> {
    let mut rows = Vec::with_capacity(4);
    for &(fiber, km, db_per_km, order, nu, va, xi_msnu, published) in &TABLE_ONE_POINTS {
        let t = 10f64.powf(-db_per_km * km / 10.0);
        let xi_b = xi_msnu * 1e-3;
        let c = crate::constellation::build_with_target_va(order, nu, va)
            .expect("table operating point constellation");
        let geometry = DiscreteGeometry::of(&c);
        let est = analytic_block_estimate(&c, t, xi_b, params.detector, params.block_size);
        let report = secret_key_rate(&est, params, RateMode::Discrete, Some(&geometry), None)?;
        rows.push(TableOneRow {
            fiber_label: fiber,
            length_km: km,
            modulation: if order == 64 { "PCS 64-QAM" } else { "PCS 256-QAM" },
            order,
            nu,
            va_snu: va,
            xi_b_msnu: xi_msnu,
            skr_published_mbps: published,
            skr_computed_mbps: report.skr_bps / 1e6,
        });
    }
    Ok(rows)
}
