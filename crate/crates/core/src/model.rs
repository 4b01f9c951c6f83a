//! The procurement game: instances, price profiles and selection outcomes.
//!
//! Module ids are 0-based inside the library and 1-based in every file format.

use serde::Serialize;
use thiserror::Error;

use crate::matroid::{Matroid, MatroidError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("{field}: expected {expected} entries, found {found}")]
    Length {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{field}[{index}] = {value} is negative")]
    Negative {
        field: &'static str,
        index: usize,
        value: Scalar,
    },
    #[error("budget must be positive, got {0}")]
    Budget(Scalar),
    #[error("costs[{index}] = {cost} exceeds the budget {budget}")]
    CostAboveBudget { index: usize, cost: Scalar, budget: Scalar },
    #[error("matroid ground set has {found} elements, instance has {expected} modules")]
    GroundSize { expected: usize, found: usize },
    #[error("module {id} out of range 0..{n}")]
    ModuleOutOfRange { id: usize, n: usize },
    #[error(transparent)]
    Matroid(#[from] MatroidError),
}

/// A procurement game: module values and private costs, a matroid over modules and a
/// budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    values: Vec<Scalar>,
    costs: Vec<Scalar>,
    budget: Scalar,
    matroid: Matroid,
}

impl Instance {
    /// Validated constructor: nonnegative values and costs, positive budget, and every
    /// cost at most the budget.
    pub fn new(values: Vec<Scalar>, costs: Vec<Scalar>, budget: Scalar, matroid: Matroid) -> Result<Self, ModelError> {
        let inst = Self::relaxed(values, costs, budget, matroid)?;
        if let Some(index) = inst.costs.iter().position(|c| *c > inst.budget) {
            return Err(ModelError::CostAboveBudget {
                index,
                cost: inst.costs[index].clone(),
                budget: inst.budget.clone(),
            });
        }
        Ok(inst)
    }

    /// Like [`Instance::new`] but tolerates costs above the budget. Such modules can
    /// never be procured profitably; a few illustrative fixtures contain them.
    pub fn relaxed(
        values: Vec<Scalar>,
        costs: Vec<Scalar>,
        budget: Scalar,
        matroid: Matroid,
    ) -> Result<Self, ModelError> {
        let n = values.len();
        if costs.len() != n {
            return Err(ModelError::Length {
                field: "costs",
                expected: n,
                found: costs.len(),
            });
        }
        if matroid.ground_size() != n {
            return Err(ModelError::GroundSize {
                expected: n,
                found: matroid.ground_size(),
            });
        }
        for (field, xs) in [("values", &values), ("costs", &costs)] {
            if let Some(index) = xs.iter().position(Scalar::is_negative) {
                return Err(ModelError::Negative {
                    field,
                    index,
                    value: xs[index].clone(),
                });
            }
        }
        if !budget.is_positive() {
            return Err(ModelError::Budget(budget));
        }
        Ok(Instance {
            values,
            costs,
            budget,
            matroid,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &Scalar {
        &self.values[i]
    }

    pub fn costs(&self) -> &[Scalar] {
        &self.costs
    }

    pub fn cost(&self, i: usize) -> &Scalar {
        &self.costs[i]
    }

    pub fn budget(&self) -> &Scalar {
        &self.budget
    }

    pub fn matroid(&self) -> &Matroid {
        &self.matroid
    }

    pub fn with_budget(&self, budget: Scalar) -> Result<Self, ModelError> {
        Self::relaxed(self.values.clone(), self.costs.clone(), budget, self.matroid.clone())
    }

    pub fn with_values(&self, values: Vec<Scalar>) -> Result<Self, ModelError> {
        Self::relaxed(values, self.costs.clone(), self.budget.clone(), self.matroid.clone())
    }

    pub fn with_matroid(&self, matroid: Matroid) -> Result<Self, ModelError> {
        Self::relaxed(self.values.clone(), self.costs.clone(), self.budget.clone(), matroid)
    }

    pub fn value_of(&self, set: &[usize]) -> Scalar {
        set.iter().map(|&i| &self.values[i]).sum()
    }

    pub fn cost_of(&self, set: &[usize]) -> Scalar {
        set.iter().map(|&i| &self.costs[i]).sum()
    }

    /// The price profile in which every module bids its cost.
    pub fn cost_prices(&self) -> PriceVector {
        PriceVector(self.costs.clone())
    }

    pub fn check_module(&self, i: usize) -> Result<(), ModelError> {
        if i < self.n() {
            Ok(())
        } else {
            Err(ModelError::ModuleOutOfRange { id: i, n: self.n() })
        }
    }

    /// `max_i c(i) / B`.
    pub fn lambda_max(&self) -> Scalar {
        let top = self.costs.iter().max().cloned().unwrap_or_else(Scalar::zero);
        top / &self.budget
    }
}

/// One posted price per module.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PriceVector(pub Vec<Scalar>);

impl PriceVector {
    pub fn new(prices: Vec<Scalar>) -> Self {
        PriceVector(prices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> &Scalar {
        &self.0[i]
    }

    pub fn as_slice(&self) -> &[Scalar] {
        &self.0
    }

    pub fn sum_over(&self, set: &[usize]) -> Scalar {
        set.iter().map(|&i| &self.0[i]).sum()
    }

    /// Copy with module `i`'s price replaced.
    pub fn with(&self, i: usize, price: Scalar) -> Self {
        let mut p = self.clone();
        p.0[i] = price;
        p
    }

    /// Whether this is a legal strategy profile: `c(i) <= p(i) <= B` for every module.
    pub fn is_strategy_profile(&self, inst: &Instance) -> bool {
        self.0.len() == inst.n()
            && self
                .0
                .iter()
                .zip(inst.costs())
                .all(|(p, c)| p >= c && p <= inst.budget())
    }
}

/// A circuit-swap event: `added` entered and `removed` left along the circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Swap {
    pub removed: usize,
    pub added: usize,
    pub circuit: Vec<usize>,
}

/// Output of a selection rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionResult {
    /// Selected modules, ascending.
    pub selected: Vec<usize>,
    pub spend: Scalar,
    /// The full order in which the rule inspects modules.
    pub inspection_order: Vec<usize>,
    pub swaps: Vec<Swap>,
    /// First module whose admission would have broken the budget.
    pub terminated_at: Option<usize>,
}

impl SelectionResult {
    pub fn contains(&self, i: usize) -> bool {
        self.selected.binary_search(&i).is_ok()
    }
}

/// `(p(i) - c(i))` if `i` is selected, else zero.
pub fn utility(inst: &Instance, p: &PriceVector, sel: &SelectionResult, i: usize) -> Result<Scalar, ModelError> {
    inst.check_module(i)?;
    Ok(if sel.contains(i) {
        p.get(i) - inst.cost(i)
    } else {
        Scalar::zero()
    })
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("grid step must be positive, got {0}")]
    Step(Scalar),
    #[error("budget {budget} is not an integer multiple of the step {step}")]
    NotMultiple { step: Scalar, budget: Scalar },
    #[error("grid step {step} violates {rule}")]
    Strict { step: Scalar, rule: String },
}

/// The bid set `{δ, 2δ, .., B}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidGrid {
    step: Scalar,
    bids: Vec<Scalar>,
}

impl BidGrid {
    pub fn new(step: Scalar, budget: &Scalar) -> Result<Self, GridError> {
        if !step.is_positive() {
            return Err(GridError::Step(step));
        }
        let count = budget / &step;
        let count = match count.to_i64() {
            Some(k) if k >= 1 => k,
            _ => {
                return Err(GridError::NotMultiple {
                    step,
                    budget: budget.clone(),
                })
            }
        };
        let bids = (1..=count).map(|k| &step * Scalar::from_int(k)).collect();
        Ok(BidGrid { step, bids })
    }

    pub fn step(&self) -> &Scalar {
        &self.step
    }

    pub fn bids(&self) -> &[Scalar] {
        &self.bids
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    /// Index of the grid point equal to `b`, if any.
    pub fn index_of(&self, b: &Scalar) -> Option<usize> {
        self.bids.binary_search(b).ok()
    }
}
