//! Desk-scale, exact simulation of quantum-oracle convex optimization.
//!
//! The crate provides:
//! - a precision-respecting, query-counted oracle layer over convex bodies
//!   and objectives ([`oracles`]);
//! - an exact statevector simulation of QFT-based gradient estimation with
//!   its diagnostics ([`qgrad`]);
//! - the randomized subgradient for non-smooth convex functions plus a
//!   classical finite-difference baseline ([`subgrad`]);
//! - height-function separation and an ellipsoid driver completing the
//!   membership → separation → optimization chain ([`reductions`]);
//! - executable lower-bound constructions: wildcard reductions,
//!   sum-of-coordinates, max-norm, discretization, and the combined
//!   instance ([`lowerbound`]);
//! - a seeded experiment harness emitting CSV ([`cli`]).

pub mod cli;
pub mod config;
pub mod error;
pub mod lowerbound;
pub mod oracles;
pub mod qgrad;
pub mod reductions;
pub mod subgrad;
pub mod vecmath;

pub use error::{Error, Result};

/// Artifact version recorded in every CSV header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
