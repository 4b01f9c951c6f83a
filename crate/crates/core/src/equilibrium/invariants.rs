use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use crate::model::{Instance, PriceVector};
use crate::selection::{bpb_cmp, greedy_bpb, TieBreak};

use super::EquilibriumOutput;

/// The first broken invariant of a weighted construction trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantViolation {
    /// 1 to 6, in the order listed on [`check_weighted_invariants`].
    pub invariant: u8,
    /// 1-based iteration; the final-outcome invariant reports the last iteration.
    pub iteration: usize,
    pub detail: String,
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invariant {} broken at iteration {}: {}",
            self.invariant, self.iteration, self.detail
        )
    }
}

impl std::error::Error for InvariantViolation {}

fn prefix_set(order: &[usize], len: usize) -> BTreeSet<usize> {
    order[..len.min(order.len())].iter().copied().collect()
}

fn worse(inst: &Instance, p: &PriceVector, a: usize, b: usize) -> bool {
    bpb_cmp(inst.value(a), p.get(a), inst.value(b), p.get(b)) == Ordering::Greater
}

/// Audits a trace of the weighted construction. With `A` the accepted set, `π` the
/// order and `p` the prices after iteration `k`, and `k*` the last iteration:
///
/// 1. the first `k − 1` modules of the order are the same set before and after the
///    iteration, and the `k`-th module is the same;
/// 2. every member of `A` has bang-per-buck at least that of every module after
///    position `k`;
/// 3. `p(A) <= B`;
/// 4. for `k < k*`, `A` has the rank of the first `k` modules;
/// 5. for `k < k*`, every other module among the first `k` is spanned by `A` and has the
///    lowest value on the circuit it closes;
/// 6. bang-per-buck greedy at the final prices (ties by the initial order) selects
///    exactly `A`, whose value is that of a maximum-weight independent subset of the
///    initial order's prefix (without the rejected module on a rollback).
///
/// Iterations are scanned in order and the first violation is returned.
pub fn check_weighted_invariants(inst: &Instance, out: &EquilibriumOutput) -> Result<(), InvariantViolation> {
    let fail = |invariant: u8, iteration: usize, detail: String| {
        Err(InvariantViolation {
            invariant,
            iteration,
            detail,
        })
    };
    let matroid = inst.matroid();
    let last = out.last_iteration;
    let mut previous = &out.initial_order;

    for snap in &out.trace {
        let k = snap.k;
        let order = &snap.order;
        let p = &snap.prices;
        let accepted = &snap.frozen;

        if prefix_set(previous, k - 1) != prefix_set(order, k - 1) || previous.get(k - 1) != order.get(k - 1) {
            return fail(
                1,
                k,
                format!("order prefix moved from {:?} to {:?}", &previous[..k], &order[..k]),
            );
        }
        for &a in accepted {
            if let Some(&b) = order[k..].iter().find(|&&b| worse(inst, p, a, b)) {
                return fail(
                    2,
                    k,
                    format!("accepted module {a} has lower bang-per-buck than module {b} after position {k}"),
                );
            }
        }
        let spend = p.sum_over(accepted);
        if spend > *inst.budget() {
            return fail(
                3,
                k,
                format!("accepted set spends {spend} over budget {}", inst.budget()),
            );
        }
        if k < last {
            let head = &order[..k];
            let (rank_a, rank_head) = (matroid.rank_of(accepted), matroid.rank_of(head));
            if rank_a != rank_head {
                return fail(
                    4,
                    k,
                    format!("rank of accepted set {rank_a} differs from prefix rank {rank_head}"),
                );
            }
            for &x in head.iter().filter(|x| !accepted.contains(x)) {
                if !matroid.spans(accepted, x) {
                    return fail(5, k, format!("dropped module {x} is not spanned by the accepted set"));
                }
                let circuit = matroid.circuit(accepted, x);
                if let Some(&y) = circuit.iter().find(|&&y| inst.value(y) < inst.value(x)) {
                    return fail(5, k, format!("dropped module {x} outvalues circuit member {y}"));
                }
            }
        }
        previous = order;
    }

    let tb = TieBreak::Explicit(out.initial_order.clone());
    let sel = greedy_bpb(inst, &out.prices, &tb);
    if sel.selected != out.selected {
        return fail(
            6,
            last,
            format!(
                "greedy selects {:?} at the final prices, construction expects {:?}",
                sel.selected, out.selected
            ),
        );
    }
    let rolled_back = out.trace.last().is_some_and(|s| s.rolled_back);
    let ground = &out.initial_order[..if rolled_back { last - 1 } else { last }];
    let best = inst.value_of(&matroid.max_weight_independent(inst.values(), ground));
    let got = inst.value_of(&out.selected);
    if got != best {
        return fail(
            6,
            last,
            format!("selected value {got} is below the prefix optimum {best}"),
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::construct_eq_weighted;
    use crate::matroid::Matroid;
    use crate::scalar::Scalar;

    fn sv(xs: &[&str]) -> Vec<Scalar> {
        xs.iter().map(|x| x.parse().unwrap()).collect()
    }

    fn triangle() -> Instance {
        let m = Matroid::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        Instance::new(sv(&["1", "2", "4"]), sv(&["0.01", "0.04", "0.2"]), Scalar::one(), m).unwrap()
    }

    #[test]
    fn construction_passes() {
        let inst = triangle();
        let out = construct_eq_weighted(&inst, &TieBreak::ByCostRatio).unwrap();
        assert_eq!(check_weighted_invariants(&inst, &out), Ok(()));
    }

    #[test]
    fn raised_accepted_price_breaks_dominance() {
        let inst = triangle();
        let mut out = construct_eq_weighted(&inst, &TieBreak::ByCostRatio).unwrap();
        let snap = &mut out.trace[1];
        let victim = snap.frozen[0];
        snap.prices.0[victim] = Scalar::from_int(10);
        let err = check_weighted_invariants(&inst, &out).unwrap_err();
        assert_eq!((err.invariant, err.iteration), (2, 2));
    }

    #[test]
    fn tampered_selection_breaks_outcome() {
        let inst = triangle();
        let mut out = construct_eq_weighted(&inst, &TieBreak::ByCostRatio).unwrap();
        out.selected = vec![2];
        assert_eq!(check_weighted_invariants(&inst, &out).unwrap_err().invariant, 6);
    }
}
