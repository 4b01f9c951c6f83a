//! Budget-constrained procurement with posted prices.
//!
//! A buyer with a budget picks modules from strategic sellers under a matroid
//! constraint; each seller posts a price. The crate provides the buyer's selection
//! rules, explicit equilibrium price constructions, an exact ε-equilibrium verifier,
//! approximation measurements against the exact optimum, and multiplicative-weights
//! price learning dynamics.
//!
//! All quantities in the model are exact rationals ([`Scalar`]); floating point only
//! appears inside the learners' sampling distributions.

// error values carry exact rationals for their messages; they sit on cold paths
#![allow(clippy::result_large_err)]

pub mod equilibrium;
pub mod experiments;
pub mod generate;
pub mod io;
pub mod learning;
pub mod matroid;
pub mod model;
pub mod scalar;
pub mod selection;

pub use matroid::Matroid;
pub use model::{BidGrid, Instance, PriceVector, SelectionResult};
pub use scalar::Scalar;
pub use selection::{Rule, TieBreak};
