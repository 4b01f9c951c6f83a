//! Repeated pricing with multiplicative-weights learners.
//!
//! Each module keeps a Hedge learner over the bid grid `{δ, 2δ, .., B}`. Every round the
//! platform runs bang-per-buck greedy on the sampled bids, pays according to a two-phase
//! distorted rule, and every learner is told what each of its bids would have earned
//! against the others' actual bids.

mod dynamics;
mod learner;
mod strict;
mod structural;

pub use crate::model::BidGrid;
pub use dynamics::{check_convergence, counterfactual_rewards, run_dynamics, DynamicsConfig, DynamicsTrace};
pub use learner::{mwu_update, LearnerState};
pub use strict::{check_strict_assumptions, cost_floor, strict_instance, StrictSpec};
pub use structural::{check_structural_lemmas, StructuralCheck, StructuralReport, StructuralViolation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::EquilibriumError;
use crate::generate::GenError;
use crate::model::{GridError, ModelError};
use crate::scalar::Scalar;
use crate::selection::SelectionError;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LearningError {
    #[error("invalid dynamics configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Generate(#[from] GenError),
}

/// What a selected module's reward counts besides the bonus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    /// Price minus cost: the module's utility.
    #[default]
    Net,
    /// The price itself.
    Gross,
}

/// Two-phase payment distortion. Up to round `switch_round` every module is paid a
/// bonus of `δ²·b` on its bid `b`; afterwards the bonus is `δ⁴/b`. Selection pays on top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaymentRule {
    switch_round: u64,
    delta: Scalar,
    mode: RewardMode,
}

impl PaymentRule {
    pub fn new(switch_round: u64, delta: Scalar, mode: RewardMode) -> Result<Self, LearningError> {
        if switch_round == 0 {
            return Err(LearningError::Config(
                "the phase switch round must be at least 1".into(),
            ));
        }
        if delta.is_negative() {
            return Err(LearningError::Config(format!("negative distortion {delta}")));
        }
        Ok(PaymentRule {
            switch_round,
            delta,
            mode,
        })
    }

    pub fn switch_round(&self) -> u64 {
        self.switch_round
    }

    pub fn delta(&self) -> &Scalar {
        &self.delta
    }

    pub fn mode(&self) -> RewardMode {
        self.mode
    }

    /// Rounds are 1-based; round `switch_round` is the last of the first phase.
    pub fn first_phase(&self, t: u64) -> bool {
        t <= self.switch_round
    }

    pub fn bonus(&self, bid: &Scalar, t: u64) -> Scalar {
        let sq = &self.delta * &self.delta;
        if self.first_phase(t) {
            sq * bid
        } else {
            &sq * &sq / bid
        }
    }
}

/// Reward of bidding `bid` in round `t`. The bid must be positive (grid bids are).
pub fn distorted_reward(bid: &Scalar, selected: bool, t: u64, rule: &PaymentRule, cost: &Scalar) -> Scalar {
    let bonus = rule.bonus(bid, t);
    if !selected {
        return bonus;
    }
    match rule.mode {
        RewardMode::Net => bid - cost + bonus,
        RewardMode::Gross => bid + &bonus,
    }
}

/// The phase-switch round `⌈n²/δ²²⌉` under which the convergence argument goes through.
/// Far beyond any run length for practical `δ`.
pub fn paper_switch_round(n: usize, delta: &Scalar) -> Result<Scalar, LearningError> {
    if !delta.is_positive() {
        return Err(LearningError::Config(format!(
            "distortion must be positive, got {delta}"
        )));
    }
    let mut power = Scalar::one();
    for _ in 0..22 {
        power = power * delta;
    }
    let n = Scalar::from_int(n as i64);
    Ok((&n * &n / power).ceil())
}
