//! Waveform and report persistence (placeholder during bring-up).
