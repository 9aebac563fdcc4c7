//! Numerical toolkit for the best constant of the trace embedding
//! `BV(Ω) → L¹(∂Ω)`.
//!
//! The constant
//!
//! ```text
//! λ₁(Ω) = inf (∫|∇u| + ∫|u|) / ∫_∂Ω |u|
//!       = inf_A (|∂A ∩ Ω| + |A|) / |A ∩ ∂Ω|
//! ```
//!
//! is computed, bounded and cross-checked by several independent routes:
//!
//! * [`exact`]: closed forms on balls and annuli, cone and cap bounds.
//! * [`asymptotics`]: boundary-layer expansions at strongly curved boundary
//!   points, checked against an adaptive quadrature oracle.
//! * [`plaplace`]: P1 finite elements for the `p > 1` quotient and the
//!   continuation `p → 1`.
//! * [`isoperimetric`]: the set formulation, eigenset search and hole
//!   constrained variants.
//! * [`shape`]: shape derivative under `T_δ = id + δR` with finite-difference
//!   validation.
//!
//! Inner loops (element assembly, quadrature cells, annealing chains) run on
//! rayon when the `parallel` feature is enabled and fall back to plain
//! iterators otherwise. Reductions use a fixed chunking so both builds give
//! bit-identical results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod isoperimetric;
pub mod par;
pub mod plaplace;
pub mod quadrature;
pub mod shape;

pub use error::{Error, Result};

/// Crate version recorded in result files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
