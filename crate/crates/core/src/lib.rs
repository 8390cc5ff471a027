//! Unitary quantum dynamics on a one-dimensional periodic lattice, interrupted
//! by instantaneous projective measurements performed at random times.
//!
//! The crate covers two lattice models and the statistics of their repeated
//! measurement:
//!
//! - [`qrw`] — the coined quantum random walk evolving in discrete time,
//! - [`tbm`] — the tight-binding model evolving in continuous time,
//! - [`intervals`] — the waiting-time laws for the gaps between measurements,
//! - [`engine`] — the evolve/measure protocol under the projected and the
//!   leftover post-measurement schemes, with deterministic ensembles,
//! - [`analytics`] — closed forms for the projected scheme and the
//!   large-deviation machinery behind the typical survival probability,
//! - [`scaling`] — power-law exponent fits, crossover detection and
//!   data-collapse scoring for the ensemble output.

pub mod analytics;
pub mod engine;
pub mod intervals;
pub mod qrw;
pub mod quad;
pub mod rng;
pub mod scaling;
pub mod special;
pub mod tbm;
pub mod tol;

pub use num_complex::Complex64;
