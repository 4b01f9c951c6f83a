use crate::model::{Instance, PriceVector};
use crate::scalar::Scalar;
use crate::selection::{bpb_order, greedy_bpb, TieBreak};

use super::{EquilibriumError, EquilibriumOutput};

/// Where the critical cost-per-value landed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdditiveCase {
    /// Exactly on module `module`'s cost-per-value `c/v`.
    Breakpoint { module: usize },
    /// Strictly between cost-per-value ratios; the selected modules spend the budget.
    Interior,
}

fn require_free(inst: &Instance) -> Result<(), EquilibriumError> {
    if inst.matroid().is_free() {
        Ok(())
    } else {
        Err(EquilibriumError::NotFree(inst.matroid().family_name()))
    }
}

/// Modules with positive value, sorted by cost-per-value `c/v` ascending.
fn cpv_sorted(inst: &Instance) -> Vec<(usize, Scalar)> {
    let mut out: Vec<(usize, Scalar)> = (0..inst.n())
        .filter(|&i| inst.value(i).is_positive())
        .map(|i| (i, inst.cost(i) / inst.value(i)))
        .collect();
    out.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    out
}

/// The largest cost-per-value `x` at which paying every willing module `v(i)·x` stays
/// within budget: `sup{x : x · Σ_{c(i) <= v(i)·x} v(i) <= B}`.
///
/// The spend is piecewise linear in `x` with jumps where `x` crosses a module's `c/v`,
/// so the supremum is either such a crossing or `B / (accepted value)` on one piece.
pub fn cpv_star(inst: &Instance) -> Result<Scalar, EquilibriumError> {
    require_free(inst)?;
    let sorted = cpv_sorted(inst);
    if sorted.is_empty() {
        return Err(EquilibriumError::AllZeroValues);
    }
    let budget = inst.budget();
    let mut accepted = Scalar::zero();
    let mut k = 0;
    while k < sorted.len() {
        let x = &sorted[k].1;
        if accepted.is_positive() {
            let level = budget / &accepted;
            if level < *x {
                return Ok(level);
            }
        }
        while k < sorted.len() && sorted[k].1 == *x {
            accepted += inst.value(sorted[k].0);
            k += 1;
        }
        if x * &accepted > *budget {
            return Ok(x.clone());
        }
    }
    Ok(budget / &accepted)
}

/// Prices `max{(x* − δ)·v(i), c(i)}` where `x*` is [`cpv_star`].
///
/// When `x*` sits exactly on a module's cost-per-value, `δ` is half the largest value
/// that is positive, below the gap to the previous cost-per-value, and at most
/// `ε/(2n·v(i))` for every module; otherwise `δ = 0`. The returned selection is the
/// bang-per-buck greedy outcome at these prices with cost-ratio tie-breaking.
pub fn additive_equilibrium(
    inst: &Instance,
    eps: &Scalar,
) -> Result<(EquilibriumOutput, AdditiveCase), EquilibriumError> {
    assert!(eps.is_positive(), "ε must be positive");
    let star = cpv_star(inst)?;
    let sorted = cpv_sorted(inst);
    let hits: Vec<usize> = sorted.iter().filter(|(_, x)| *x == star).map(|(i, _)| *i).collect();
    let (case, slack) = match hits.as_slice() {
        [] => (AdditiveCase::Interior, Scalar::zero()),
        [module] => {
            let vmax = inst.values().iter().max().cloned().unwrap_or_else(Scalar::one);
            let n = Scalar::from_int(inst.n() as i64);
            let mut limit = eps / (Scalar::from_int(2) * n * vmax);
            if let Some((_, prev)) = sorted.iter().rev().find(|(_, x)| *x < star) {
                limit = Scalar::min_of(&limit, &(&star - prev));
            }
            (
                AdditiveCase::Breakpoint { module: *module },
                limit / Scalar::from_int(2),
            )
        }
        [a, b, ..] => return Err(EquilibriumError::TiedRatios(*a, *b)),
    };
    let level = &star - &slack;
    let prices = PriceVector(
        (0..inst.n())
            .map(|i| Scalar::max_of(&(&level * inst.value(i)), inst.cost(i)))
            .collect(),
    );
    let tb = TieBreak::ByCostRatio;
    let sel = greedy_bpb(inst, &prices, &tb);
    let out = EquilibriumOutput {
        order: sel.inspection_order.clone(),
        selected: sel.selected,
        initial_order: bpb_order(inst, &inst.cost_prices(), &tb),
        prices,
        trace: Vec::new(),
        last_iteration: 0,
        slack: Some(slack),
    };
    Ok((out, case))
}
