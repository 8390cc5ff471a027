//! Centralized numerical tolerances.
//!
//! Every comparison threshold used across the crate is defined here so that
//! the same physical statement is always checked at the same precision.

/// Agreement between independent propagation routes (closed form, spectral
/// evolution, direct stepping) for the same amplitudes.
pub const PROPAGATOR_EQUIV: f64 = 1e-10;

/// Norm conservation under unitary-only evolution.
pub const UNITARITY: f64 = 1e-12;

/// Occupation that should vanish exactly (parity-forbidden sites).
pub const EXACT_ZERO: f64 = 1e-14;

/// Relative tolerance for adaptive quadrature in expectation values.
pub const QUAD_REL: f64 = 1e-9;

/// Cumulative mass left out when truncating the tail of a discrete law.
pub const MASS_TAIL: f64 = 1e-12;

/// Tolerated monotonicity violation in survival series (numerical noise).
pub const MONOTONE_NOISE: f64 = 1e-12;
