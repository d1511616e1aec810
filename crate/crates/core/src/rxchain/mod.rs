//! Receiver DSP (placeholder during bring-up).
