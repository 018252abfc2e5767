//! Shared fixtures for the benchmark targets.
