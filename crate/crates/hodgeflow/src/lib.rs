//! Discrete exterior calculus on triangulated surfaces with boundary.
//!
//! The crate provides, in dependency order:
//! - [`mesh`]: oriented simplicial 2-manifolds, generators, OFF IO, boundary
//!   distance, strip cutoffs;
//! - [`dec`]: cochains, exterior derivative, Hodge stars, codifferentials,
//!   Whitney interpolation;
//! - [`hodge`]: Laplacians, harmonic spaces, the three-term and refined
//!   four-term Hodge decompositions, Leray projection, pressure recovery,
//!   and the first-order Dirac operator;
//! - [`heat`]: the spectral Neumann heat semigroup and its smoothing and
//!   commutation diagnostics;
//! - [`norms`]: Lebesgue, Sobolev, and oscillation-based Besov estimators
//!   plus coarea diagnostics;
//! - [`euler`]: the incompressible-flow experiment pipeline (nonlinear term,
//!   mollified commutators, Duhamel reconstruction, energy ledger);
//! - [`config`] and [`run`]: JSON-driven experiment configuration backing
//!   the `hodgeflow` binary.

pub mod config;
pub mod dec;
pub mod error;
pub mod euler;
pub mod heat;
pub mod hodge;
pub mod mesh;
pub mod norms;
pub mod run;

pub use error::{Error, Result};
