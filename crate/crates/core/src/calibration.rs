//! Noise calibration (placeholder during bring-up).
