//! Equilibrium prices: explicit constructions, an exact ε-equilibrium verifier, price
//! transforms that move toward worst-case equilibria, and approximation measurement.

mod additive;
mod approx;
mod canonical;
mod construct;
mod invariants;
mod perturb;
mod verify;

pub use additive::{additive_equilibrium, cpv_star, AdditiveCase};
pub use approx::{
    approx_ratio, bound_additive, bound_unit_values, bound_weighted, check_bpb_tightness, check_equal_bpb,
    check_spend_floor, opt_with_costs, opt_with_costs_bnb, opt_with_costs_capped, simplified_weighted_ratio,
    small_cost_bound,
};
pub use canonical::{canonicalize_worst_additive, lower_rejected_prefix_to_cost};
pub use construct::{construct_eq_unweighted, construct_eq_weighted, construct_eq_weighted_with, RollbackCap};
pub use invariants::{check_weighted_invariants, InvariantViolation};
pub use perturb::{perturb_distinct_ratios, ratios_distinct};
pub use verify::{default_eta, deviation_utility, verify_eps_equilibrium, DevGrid, DeviationReport, ModuleDeviation};

use thiserror::Error;

use crate::model::{ModelError, PriceVector};
use crate::scalar::Scalar;
use crate::selection::SelectionError;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EquilibriumError {
    #[error("this construction needs a free matroid, got {0}")]
    NotFree(&'static str),
    #[error("module {0} has zero value")]
    ZeroValue(usize),
    #[error("every module has zero value")]
    AllZeroValues,
    #[error("modules {0} and {1} share the critical cost-per-value ratio; perturb values first")]
    TiedRatios(usize, usize),
    #[error("module {0} is selected at the given prices")]
    Selected(usize),
    #[error("price vector has {found} entries, instance has {expected}")]
    PriceLength { expected: usize, found: usize },
    #[error("transformed prices failed a post-condition: {0}")]
    PostCondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

/// State of a construction after one iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    /// 1-based iteration number.
    pub k: usize,
    /// The module examined in this iteration.
    pub inspected: usize,
    /// Modules whose prices are frozen (the accepted set for the weighted construction).
    pub frozen: Vec<usize>,
    /// Modules still raising their prices (always empty for the weighted construction).
    pub raising: Vec<usize>,
    pub prices: PriceVector,
    /// Bang-per-buck order at `prices`, ties broken by the initial order.
    pub order: Vec<usize>,
    pub circuit: Option<Vec<usize>>,
    pub evicted: Option<usize>,
    /// The inspected module broke the budget and the construction stopped here.
    pub rolled_back: bool,
}

/// Prices produced by a constructor together with the evidence needed to audit them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumOutput {
    pub prices: PriceVector,
    /// Final bang-per-buck order.
    pub order: Vec<usize>,
    /// The set the constructor expects the buyer to select, ascending.
    pub selected: Vec<usize>,
    /// Order by `v/c` at cost prices.
    pub initial_order: Vec<usize>,
    pub trace: Vec<Snapshot>,
    /// Number of iterations run (the last one may be a rollback).
    pub last_iteration: usize,
    /// Slack subtracted from the critical ratio by the additive construction.
    pub slack: Option<Scalar>,
}

fn check_len(p: &PriceVector, n: usize) -> Result<(), EquilibriumError> {
    if p.len() == n {
        Ok(())
    } else {
        Err(EquilibriumError::PriceLength {
            expected: n,
            found: p.len(),
        })
    }
}
