//! Channel simulation (placeholder during bring-up).
