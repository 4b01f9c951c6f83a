//! Iterative equilibrium constructions for matroid-constrained buyers.
//!
//! Both start from cost prices and walk the initial bang-per-buck order. At step `k` the
//! modules already holding a price lift match the bang-per-buck of the `k`-th module (still
//! at cost), which is then accepted, swapped in or rejected according to the matroid.

use crate::model::{Instance, PriceVector};
use crate::scalar::Scalar;
use crate::selection::{bpb_order, bpb_order_ranked, eviction_choice, TieBreak};

use super::{EquilibriumError, EquilibriumOutput, Snapshot};

/// Price cap applied to the accepted set when the weighted construction stops on a budget
/// violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RollbackCap {
    /// `min{v(i)·B / v(A), p(i)}`: the accepted set is scaled to spend at most the budget.
    #[default]
    Budget,
    /// `min{v(i)·(B − p_prev(A)) / v(A), p(i)}`, the residual form carried over from the
    /// unit-value construction. There the frozen modules own `p_prev(A)`; here nothing is
    /// frozen, so this form undercuts the accepted set. Kept for comparison only.
    Residual,
}

fn require_positive_values(inst: &Instance) -> Result<(), EquilibriumError> {
    match inst.values().iter().position(|v| !v.is_positive()) {
        Some(i) => Err(EquilibriumError::ZeroValue(i)),
        None => Ok(()),
    }
}

fn sorted(mut set: Vec<usize>) -> Vec<usize> {
    set.sort_unstable();
    set
}

fn positions(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (k, &i) in order.iter().enumerate() {
        pos[i] = k;
    }
    pos
}

/// Sets every price in `set` to `ratio · v(i)`.
fn lift(inst: &Instance, prices: &mut PriceVector, set: &[usize], ratio: &Scalar) {
    for &j in set {
        prices.0[j] = ratio * inst.value(j);
    }
}

struct Walk {
    initial: Vec<usize>,
    rank: Vec<usize>,
    ties: Vec<usize>,
}

impl Walk {
    fn new(inst: &Instance, tb: &TieBreak) -> Self {
        let initial = bpb_order(inst, &inst.cost_prices(), tb);
        let rank = positions(&initial);
        Walk {
            initial,
            rank,
            ties: tb.ranks(inst),
        }
    }

    fn order(&self, inst: &Instance, prices: &PriceVector) -> Vec<usize> {
        bpb_order_ranked(inst, prices, &self.rank)
    }
}

/// Equilibrium prices for a weighted matroid buyer running bang-per-buck greedy with
/// circuit swaps, with the default rollback cap.
pub fn construct_eq_weighted(inst: &Instance, tb: &TieBreak) -> Result<EquilibriumOutput, EquilibriumError> {
    construct_eq_weighted_with(inst, tb, RollbackCap::Budget)
}

/// The accepted set `A` starts empty. At step `k`, with `m` the `k`-th module of the
/// current order:
///
/// 1. every member of `A` is re-priced to `m`'s bang-per-buck;
/// 2. `m` joins `A` if `A` does not span it, otherwise it replaces the lowest-value
///    member of the circuit it closes (losing ties itself, in which case `A` is unchanged);
/// 3. if the new `A` costs more than the budget, `A` reverts, its prices are capped per
///    `cap` and the construction stops.
///
/// A run that inspects every module finishes by scaling `A` up to spend the whole budget.
pub fn construct_eq_weighted_with(
    inst: &Instance,
    tb: &TieBreak,
    cap: RollbackCap,
) -> Result<EquilibriumOutput, EquilibriumError> {
    require_positive_values(inst)?;
    let n = inst.n();
    let walk = Walk::new(inst, tb);
    let budget = inst.budget();
    let mut prices = inst.cost_prices();
    let mut order = walk.initial.clone();
    let mut accepted: Vec<usize> = Vec::new();
    let mut trace = Vec::with_capacity(n);

    for k in 1..=n {
        let entering = order[k - 1];
        let previous_prices = prices.clone();
        let ratio = prices.get(entering) / inst.value(entering);
        lift(inst, &mut prices, &accepted, &ratio);

        let (next, circuit, evicted) = if !inst.matroid().spans(&accepted, entering) {
            let mut next = accepted.clone();
            next.push(entering);
            (next, None, None)
        } else {
            let circuit = inst.matroid().circuit(&accepted, entering);
            let out = eviction_choice(inst, &circuit, &walk.ties);
            let next = accepted
                .iter()
                .copied()
                .filter(|&x| x != out)
                .chain((out != entering).then_some(entering))
                .collect();
            (next, Some(circuit), Some(out))
        };

        if prices.sum_over(&next) > *budget {
            let value = inst.value_of(&accepted);
            let per_value = match cap {
                RollbackCap::Budget => budget / &value,
                RollbackCap::Residual => (budget - previous_prices.sum_over(&accepted)) / &value,
            };
            for &j in &accepted {
                let capped = &per_value * inst.value(j);
                if capped < prices.0[j] {
                    prices.0[j] = capped;
                }
            }
            order = walk.order(inst, &prices);
            trace.push(Snapshot {
                k,
                inspected: entering,
                frozen: sorted(accepted.clone()),
                raising: Vec::new(),
                prices: prices.clone(),
                order: order.clone(),
                circuit,
                evicted,
                rolled_back: true,
            });
            return Ok(EquilibriumOutput {
                prices,
                order,
                selected: sorted(accepted),
                initial_order: walk.initial,
                trace,
                last_iteration: k,
                slack: None,
            });
        }

        accepted = next;
        order = walk.order(inst, &prices);
        trace.push(Snapshot {
            k,
            inspected: entering,
            frozen: sorted(accepted.clone()),
            raising: Vec::new(),
            prices: prices.clone(),
            order: order.clone(),
            circuit,
            evicted,
            rolled_back: false,
        });
    }

    if !accepted.is_empty() {
        let per_value = budget / inst.value_of(&accepted);
        lift(inst, &mut prices, &accepted, &per_value);
        order = walk.order(inst, &prices);
    }
    Ok(EquilibriumOutput {
        prices,
        order,
        selected: sorted(accepted),
        initial_order: walk.initial,
        trace,
        last_iteration: n,
        slack: None,
    })
}

/// Equilibrium prices for a matroid buyer running the skip-infeasible greedy (which is
/// the swap greedy when all values are equal).
///
/// Two sets are kept: `T`, whose prices keep rising, and `A`, whose prices are frozen.
/// At step `k`, with `m` the `k`-th module of the current order:
///
/// 1. every member of `T` is re-priced to `m`'s bang-per-buck;
/// 2. if `A ∪ T` does not span `m`, it joins `T`; otherwise the circuit it closes, minus
///    `m`, is frozen into `A` and leaves `T`;
/// 3. if `A ∪ T` now costs more than the budget, both sets revert, `T` is capped at
///    `min{v(i)·(B − p(A)) / v(T), p(i)}` and the construction stops.
///
/// A run that inspects every module finishes by scaling `T` up so that `A ∪ T` spends
/// the whole budget. The selected set is `A ∪ T`.
pub fn construct_eq_unweighted(inst: &Instance, tb: &TieBreak) -> Result<EquilibriumOutput, EquilibriumError> {
    require_positive_values(inst)?;
    let n = inst.n();
    let walk = Walk::new(inst, tb);
    let budget = inst.budget();
    let mut prices = inst.cost_prices();
    let mut order = walk.initial.clone();
    let mut frozen: Vec<usize> = Vec::new();
    let mut raising: Vec<usize> = Vec::new();
    let mut trace = Vec::with_capacity(n);

    for k in 1..=n {
        let entering = order[k - 1];
        let ratio = prices.get(entering) / inst.value(entering);
        lift(inst, &mut prices, &raising, &ratio);

        let held: Vec<usize> = frozen.iter().chain(&raising).copied().collect();
        let (next_frozen, next_raising, circuit) = if !inst.matroid().spans(&held, entering) {
            let mut next = raising.clone();
            next.push(entering);
            (frozen.clone(), next, None)
        } else {
            let circuit = inst.matroid().circuit(&held, entering);
            let mut next_frozen = frozen.clone();
            next_frozen.extend(
                circuit
                    .iter()
                    .copied()
                    .filter(|&x| x != entering && !frozen.contains(&x)),
            );
            let next_raising = raising.iter().copied().filter(|x| !next_frozen.contains(x)).collect();
            (next_frozen, next_raising, Some(circuit))
        };

        let spend = prices.sum_over(&next_frozen) + prices.sum_over(&next_raising);
        if spend > *budget && !raising.is_empty() {
            let per_value = (budget - prices.sum_over(&frozen)) / inst.value_of(&raising);
            for &j in &raising {
                let capped = &per_value * inst.value(j);
                if capped < prices.0[j] {
                    prices.0[j] = capped;
                }
            }
        }
        if spend > *budget {
            order = walk.order(inst, &prices);
            trace.push(Snapshot {
                k,
                inspected: entering,
                frozen: sorted(frozen.clone()),
                raising: sorted(raising.clone()),
                prices: prices.clone(),
                order: order.clone(),
                circuit,
                evicted: None,
                rolled_back: true,
            });
            return Ok(EquilibriumOutput {
                prices,
                order,
                selected: sorted(frozen.into_iter().chain(raising).collect()),
                initial_order: walk.initial,
                trace,
                last_iteration: k,
                slack: None,
            });
        }

        frozen = next_frozen;
        raising = next_raising;
        order = walk.order(inst, &prices);
        trace.push(Snapshot {
            k,
            inspected: entering,
            frozen: sorted(frozen.clone()),
            raising: sorted(raising.clone()),
            prices: prices.clone(),
            order: order.clone(),
            circuit,
            evicted: None,
            rolled_back: false,
        });
    }

    if !raising.is_empty() {
        let per_value = (budget - prices.sum_over(&frozen)) / inst.value_of(&raising);
        lift(inst, &mut prices, &raising, &per_value);
        order = walk.order(inst, &prices);
    }
    Ok(EquilibriumOutput {
        prices,
        order,
        selected: sorted(frozen.into_iter().chain(raising).collect()),
        initial_order: walk.initial,
        trace,
        last_iteration: n,
        slack: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::Matroid;
    use crate::selection::{greedy_bpb, greedy_skip};

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    fn sv(xs: &[&str]) -> Vec<Scalar> {
        xs.iter().map(|x| s(x)).collect()
    }

    #[test]
    fn free_two_modules_spend_budget() {
        let inst = Instance::new(sv(&["1", "1"]), sv(&["0.1", "0.1"]), s("1"), Matroid::free(2)).unwrap();
        let tb = TieBreak::ByCostRatio;
        let out = construct_eq_weighted(&inst, &tb).unwrap();
        assert_eq!(out.prices.0, sv(&["1/2", "1/2"]));
        assert_eq!(out.selected, vec![0, 1]);
        assert_eq!(out.last_iteration, 2);
        let unit = construct_eq_unweighted(&inst, &tb).unwrap();
        assert_eq!(unit.prices, out.prices);
    }

    #[test]
    fn budget_rollback_caps_accepted() {
        // module 2 at cost 0.9 cannot join {0, 1} lifted to its ratio
        let inst = Instance::new(
            sv(&["1", "1", "1"]),
            sv(&["0.1", "0.2", "0.9"]),
            s("1"),
            Matroid::free(3),
        )
        .unwrap();
        let out = construct_eq_weighted(&inst, &TieBreak::ByCostRatio).unwrap();
        assert_eq!(out.last_iteration, 3);
        assert!(out.trace.last().unwrap().rolled_back);
        assert_eq!(out.selected, vec![0, 1]);
        // lifted to 0.9 each, then capped at v(i)·B/v(A) = 1/2
        assert_eq!(out.prices.0, sv(&["1/2", "1/2", "0.9"]));
        let sel = greedy_bpb(&inst, &out.prices, &TieBreak::ByCostRatio);
        assert_eq!(sel.selected, out.selected);
    }

    #[test]
    fn residual_cap_undercuts() {
        let inst = Instance::new(
            sv(&["1", "1", "1"]),
            sv(&["0.1", "0.2", "0.9"]),
            s("1"),
            Matroid::free(3),
        )
        .unwrap();
        let out = construct_eq_weighted_with(&inst, &TieBreak::ByCostRatio, RollbackCap::Residual).unwrap();
        // previous spend 0.2 + 0.2 leaves 0.6 spread over value 2
        assert_eq!(out.prices.0, sv(&["0.3", "0.3", "0.9"]));
    }

    #[test]
    fn weighted_swap_replaces_low_value() {
        // triangle on {0,1,2}; module 2 has the highest value and lowest bang-per-buck
        let m = Matroid::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let inst = Instance::new(sv(&["1", "2", "4"]), sv(&["0.01", "0.04", "0.2"]), s("1"), m).unwrap();
        let tb = TieBreak::ByCostRatio;
        let out = construct_eq_weighted(&inst, &tb).unwrap();
        let swap = &out.trace[2];
        assert_eq!(swap.evicted, Some(0));
        assert_eq!(out.selected, vec![1, 2]);
        assert_eq!(greedy_bpb(&inst, &out.prices, &tb).selected, out.selected);
        assert_eq!(out.prices.sum_over(&out.selected), s("1"));
    }

    #[test]
    fn unweighted_freezes_circuit() {
        let m = Matroid::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let inst = Instance::new(sv(&["1", "1", "1"]), sv(&["0.1", "0.2", "0.3"]), s("1"), m).unwrap();
        let tb = TieBreak::ByCostRatio;
        let out = construct_eq_unweighted(&inst, &tb).unwrap();
        let last = out.trace.last().unwrap();
        assert_eq!(last.frozen, vec![0, 1]);
        assert!(last.raising.is_empty());
        // frozen at the third module's ratio, nothing left to top up
        assert_eq!(out.prices.0, sv(&["0.3", "0.3", "0.3"]));
        assert_eq!(greedy_skip(&inst, &out.prices, &tb).selected, out.selected);
    }

    #[test]
    fn zero_value_rejected() {
        let inst = Instance::new(sv(&["1", "0"]), sv(&["0.1", "0.1"]), s("1"), Matroid::free(2)).unwrap();
        assert_eq!(
            construct_eq_weighted(&inst, &TieBreak::ByCostRatio),
            Err(EquilibriumError::ZeroValue(1))
        );
        assert_eq!(
            construct_eq_unweighted(&inst, &TieBreak::ByCostRatio),
            Err(EquilibriumError::ZeroValue(1))
        );
    }
}
