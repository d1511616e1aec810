//! Secret-key-rate machinery: mutual information, Holevo bounds through a
//! shared Gaussian covariance engine, and finite-size rates.

pub mod discrete;
pub mod gaussian;
pub mod mi;
pub mod rates;

use thiserror::Error;

pub use discrete::{holevo_discrete, DiscreteGeometry};
pub use gaussian::{
    holevo_gaussian, symplectic_eigenvalues, symplectic_eigenvalues_invariants, entropy_g,
    TwoModeCovariance,
};
pub use mi::{discrete_mutual_information, mutual_information};
pub use rates::{
    distance_sweep, finite_size_delta, optimal_va, secret_key_rate, table_one_rows, DistancePoint,
    FiberSpec, RateMode, RateReport, TableOneRow,
};

#[derive(Debug, Error, PartialEq)]
pub enum SecurityError {
    #[error("covariance matrix is unphysical: min symplectic eigenvalue {0}")]
    PhysicalityViolation(f64),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

/// Detector model used when referring measured noise to the channel output.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum DetectorModel {
    /// Detector efficiency and electronic noise are trusted (not Eve's).
    Trusted { eta: f64, v_el: f64 },
    /// Detector imperfections are attributed to the channel.
    Untrusted { eta: f64, v_el: f64 },
}

impl DetectorModel {
    pub fn eta(&self) -> f64 {
        match *self {
            DetectorModel::Trusted { eta, .. } | DetectorModel::Untrusted { eta, .. } => eta,
        }
    }

    pub fn v_el(&self) -> f64 {
        match *self {
            DetectorModel::Trusted { v_el, .. } | DetectorModel::Untrusted { v_el, .. } => v_el,
        }
    }
}

/// Finite-size rate parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RateParams {
    /// Reconciliation efficiency β.
    pub beta: f64,
    /// Total security parameter ε.
    pub epsilon: f64,
    /// Block size N entering the finite-size penalty and worst-case bounds.
    pub block_size: usize,
    /// Symbol rate in baud.
    pub symbol_rate: f64,
    /// Fraction of slots carrying QKD symbols (pilot overhead).
    pub qkd_fraction: f64,
    pub detector: DetectorModel,
}

impl RateParams {
    pub fn validate(&self) -> Result<(), SecurityError> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(SecurityError::InvalidParams(format!(
                "beta must be in (0,1], got {}",
                self.beta
            )));
        }
        if !(self.qkd_fraction > 0.0 && self.qkd_fraction <= 1.0) {
            return Err(SecurityError::InvalidParams(format!(
                "qkd_fraction must be in (0,1], got {}",
                self.qkd_fraction
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(SecurityError::InvalidParams(format!(
                "epsilon must be in (0,1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Parameter-estimation failure probability: ε/4 by declared convention.
    pub fn epsilon_pe(&self) -> f64 {
        self.epsilon / 4.0
    }
}

impl Default for RateParams {
    fn default() -> Self {
        Self {
            beta: 0.95,
            epsilon: 1e-10,
            block_size: 5_000_000,
            symbol_rate: 600e6,
            qkd_fraction: 0.5,
            detector: DetectorModel::Trusted {
                eta: 0.65,
                v_el: 0.1,
            },
        }
    }
}
