//! Desk-scale construction and verification toolkit for rank-one (C,F)
//! transformations, their `∏ ℤ/2ℤ`-valued cocycles and the weak limits of
//! powers of the associated twisted Koopman operators.
//!
//! The crate is organised bottom-up:
//!
//! - [`bitgroup`]: the group `G = ⊕ ℤ/2ℤ`, its shift, periodic points of the
//!   dual `K = ∏ ℤ/2ℤ` and the character averages `l_χ(a)`.
//! - [`blocksys`]: the inductive block family `{A_i}` defining `H ⊂ G` and the
//!   orbit-count oracle for `L(G, H, v)`.
//! - [`cfsystem`]: the (C,F) levels, exact tower measures and point dynamics.
//! - [`cocycle`]: per-level cocycle tables and the tail-relation cocycle.
//! - [`koopman`]: exact inner products of twisted Koopman powers and
//!   weak-limit traces.
//! - [`oracle`]: brute-force point-dynamics oracle and hand-built toy systems.
//! - [`multiset_calc`]: predicted multiplicity sets.
//!
//! All measures are exact rationals. Quantities that depend on the unbuilt
//! tail of a construction are reported as [`interval::RatInterval`]s that are
//! certified to contain the true value.

pub mod bitgroup;
pub mod blocksys;
pub mod cfsystem;
pub mod cocycle;
mod error;
pub mod interval;
pub mod koopman;
pub mod multiset_calc;
pub mod oracle;

pub use error::{Error, Result};

/// Exact rational used for every measure and matrix element.
pub type Rational = num_rational::BigRational;
