//! Quasi-flat matrix models of quantum permutation groups.
//!
//! The crate builds the explicit model families (classical sparse Latin
//! square models, cyclic and free-product group duals, amalgamated and
//! commuting-power quotients, induced representations of virtually abelian
//! groups) and checks their structural properties numerically: orbit
//! patterns, Hopf images, stationarity and inner faithfulness.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod latin;
pub mod magic;
pub mod models;
pub mod perm;
pub mod selftest;

pub use error::{Error, Result};

/// Default tolerance ladder.
pub mod tol {
    /// Exact constructions (unitarity of sampled matrices, relations).
    pub const CONSTRUCTION: f64 = 1e-12;
    /// Numerical validation of projections, magic sums and traces.
    pub const VALIDATION: f64 = 1e-10;
    /// Statistical decisions and word survival.
    pub const STATISTICAL: f64 = 1e-6;
}
