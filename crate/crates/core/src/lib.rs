//! Asymmetric Fourier uniqueness sets on the circle `T = [0,1)`.
//!
//! The crate builds compact sets `E` as finite intersections of complements of
//! dilated arc unions and attaches machine-checkable certificates to them:
//! Beurling–Carleson entropy, ℓ^q mass on disjoint frequency blocks, uniform
//! `A_r` bounds for densities supported on `E`, two-sided ℓ^p capacity bounds
//! and one-sided simultaneous approximation by dilated outer functions.
//!
//! Conventions: characters are `e^{2πint}`, `f̂(n) = ∫ f(t) e^{-2πint} dt`,
//! logarithms are natural, and every norm is reported as an interval.

// Parameter guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bumps;
pub mod capacity;
pub mod density;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod numeric;
pub mod outer;
pub mod separation;
pub mod spectrum;
pub mod uniqueness;

pub use error::{Error, Result};
