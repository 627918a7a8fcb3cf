//! Conclique-based goodness-of-fit testing for Markov random field models
//! on integer lattices.
//!
//! The pipeline: partition lattice sites into concliques (sets of mutually
//! non-neighboring sites), transform observations into generalized spatial
//! residuals through a randomized probability integral transform of the
//! model's conditional distributions, pool conclique-wise empirical
//! processes into four goodness-of-fit statistics, and calibrate them
//! against the simulated limit law (simple null) or a parametric bootstrap
//! (composite null). Conditional Gaussian fields can be fitted by maximum
//! likelihood or pseudolikelihood and simulated by conclique-blocked Gibbs
//! sampling.

pub mod bootstrap;
pub mod conclique;
pub mod error;
pub mod estimate;
pub mod gof;
pub mod grid;
pub mod lattice;
pub mod model;
pub mod normal;
pub mod nulldist;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
