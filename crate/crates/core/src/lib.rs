//! Numerical laboratory for microstate free entropy.
//!
//! The crate evaluates trace formulas (with `sup`/`inf` quantifiers over
//! operator-norm balls) on tuples of matrices, estimates normalized
//! log-volumes of microstate spaces by Monte Carlo, provides exact free
//! cumulant oracles for free independence, samples matrix Gibbs ensembles,
//! iterates a discrete Hopf–Lax semigroup and measures unitary-orbit
//! distances.

pub mod cli;
pub mod error;
pub mod freeness;
pub mod gibbs;
pub mod matrix;
pub mod microstates;
pub mod moments;
pub mod ncpoly;
pub mod optimize;
pub mod transport;

pub use error::{Error, Result};
