//! Transmit chain (placeholder during bring-up).
