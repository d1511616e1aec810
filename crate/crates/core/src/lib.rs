//! Desk-scale simulation testbench for continuous-variable quantum key
//! distribution with probabilistically shaped QAM.
//!
//! The crate covers the full software path of a coherent CV-QKD link:
//!
//! * [`constellation`] — build, normalize, optimize and sample PCS-QAM
//!   constellations in shot-noise units.
//! * [`txchain`] — CAZAC header, pilot interleaving, RRC pulse shaping at
//!   600 MBaud on a 5 GS/s grid and the 500 MHz digital upshift.
//! * [`channel`] — fiber loss, polarization rotation, carrier frequency
//!   offset, laser phase noise and calibrated Gaussian noise injection,
//!   producing the four "oscilloscope" records plus paired calibration
//!   records.
//! * [`rxchain`] — front-end conversion, frame synchronization, pilot-aided
//!   adaptive equalization, carrier frequency and phase recovery.
//! * [`calibration`] — volt-to-shot-noise-unit conversion with DSP
//!   propagation of the noise records.
//! * [`estimation`] — per-block channel parameter estimation and worst-case
//!   finite-size bounds.
//! * [`security`] — mutual information, Holevo bounds through a Gaussian
//!   covariance engine, and finite-size secret key rates.
//! * [`orchestrator`] — experiment execution, sweeps and reporting.
//!
//! Conventions: field amplitudes are expressed in √SNU. The quadrature pair
//! of a complex amplitude α is (2·Re α, 2·Im α), so vacuum noise has variance
//! 1 per quadrature and E[|α|²] = V_A/2 gives per-quadrature modulation
//! variance V_A.

pub mod calibration;
pub mod channel;
pub mod constellation;
pub mod dsp;
pub mod estimation;
pub mod io;
pub mod orchestrator;
pub mod rxchain;
pub mod security;
pub mod txchain;
pub mod util;

pub use num_complex::Complex64;
