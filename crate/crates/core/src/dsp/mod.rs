//! Shared DSP primitives: pulse shaping, rational resampling, CAZAC
//! sequences and FFT-based correlation.

pub mod cazac;
pub mod fir;
pub mod resample;
pub mod rrc;
