//! Exact unilateral-deviation audit.
//!
//! Holding the others fixed, module `i`'s outcome only changes where its bang-per-buck
//! crosses another module's (`b = p(j)·v(i)/v(j)`) or where a budget check involving it
//! flips (`b = B − p(rest)`). Between consecutive such points the outcome is constant, and
//! its utility `b − c(i)` grows with `b`, so the best price in each piece is its right end.
//! Closed right ends are evaluated exactly; open ones are approached to within `η`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::model::{Instance, PriceVector};
use crate::scalar::Scalar;
use crate::selection::{bpb_order, swap_step, Rule, SelectionError, TieBreak};

use super::{check_len, EquilibriumError};

/// Largest instance the optimal rule is audited on; candidate enumeration walks every
/// subset of the other modules.
const OPT_AUDIT_CAP: usize = 16;

/// Which deviation prices to try.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum DevGrid {
    /// Every outcome-changing price, with open ends approached to within `eta`
    /// (default [`default_eta`]).
    #[default]
    Exact,
    ExactWithEta(Scalar),
    /// A fixed candidate list per module.
    Explicit(Vec<Vec<Scalar>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuleDeviation {
    pub module: usize,
    pub price: Scalar,
    pub utility: Scalar,
    pub best_price: Scalar,
    pub best_utility: Scalar,
    pub gain: Scalar,
    pub candidates: usize,
    /// `gain > ε`.
    pub profitable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeviationReport {
    pub eps: Scalar,
    /// The nudge used for open interval ends; absent for explicit grids.
    pub eta: Option<Scalar>,
    pub modules: Vec<ModuleDeviation>,
    pub pass: bool,
}

impl DeviationReport {
    pub fn max_gain(&self) -> Scalar {
        self.modules
            .iter()
            .map(|m| m.gain.clone())
            .max()
            .unwrap_or_else(Scalar::zero)
    }

    pub fn violators(&self) -> Vec<usize> {
        self.modules.iter().filter(|m| m.profitable).map(|m| m.module).collect()
    }
}

/// Module `i`'s utility when it posts `b` and everyone else keeps `p`.
pub fn deviation_utility(
    inst: &Instance,
    p: &PriceVector,
    i: usize,
    b: &Scalar,
    rule: Rule,
    tb: &TieBreak,
) -> Result<Scalar, SelectionError> {
    let sel = rule.select(inst, &p.with(i, b.clone()), tb)?;
    Ok(if sel.contains(i) {
        b - inst.cost(i)
    } else {
        Scalar::zero()
    })
}

/// Prices in `[c(i), B]` where module `i`'s position in the bang-per-buck order can
/// change, plus both ends, ascending and distinct.
fn order_points(inst: &Instance, p: &PriceVector, i: usize) -> Vec<Scalar> {
    let (lo, hi) = (inst.cost(i), inst.budget());
    if lo > hi {
        return Vec::new();
    }
    let mut points: BTreeSet<Scalar> = [lo.clone(), hi.clone()].into();
    for j in (0..inst.n()).filter(|&j| j != i && inst.value(j).is_positive()) {
        let r = p.get(j) * inst.value(i) / inst.value(j);
        if r > *lo && r < *hi {
            points.insert(r);
        }
    }
    points.into_iter().collect()
}

/// A quarter of the smallest gap between consecutive order points over all modules, or
/// `B/4` when no module has two points.
pub fn default_eta(inst: &Instance, p: &PriceVector) -> Scalar {
    (0..inst.n())
        .flat_map(|i| {
            let pts = order_points(inst, p, i);
            pts.windows(2).map(|w| &w[1] - &w[0]).collect::<Vec<_>>()
        })
        .min()
        .unwrap_or_else(|| inst.budget().clone())
        / Scalar::from_int(4)
}

/// Budget thresholds `t` such that, with the order fixed, a budget check involving `i`
/// passes iff `b <= t`. Follows the run that passes every such check.
fn run_thresholds(
    inst: &Instance,
    p: &PriceVector,
    i: usize,
    order: &[usize],
    rank: &[usize],
    rule: Rule,
) -> Vec<Scalar> {
    let budget = inst.budget();
    let mut held: Vec<usize> = Vec::new();
    let mut rest = Scalar::zero();
    let mut out = Vec::new();
    for &e in order {
        let (next, removed) = match rule {
            Rule::Bpb => match swap_step(inst, &held, e, rank) {
                (Some(next), swap) => (next, swap.map(|s| s.removed)),
                (None, _) => continue,
            },
            _ => {
                if !inst.matroid().independent_with(&held, e) {
                    continue;
                }
                let mut next = held.clone();
                next.push(e);
                (next, None)
            }
        };
        let mut next_rest = rest.clone();
        if e != i {
            next_rest += p.get(e);
        }
        if let Some(r) = removed.filter(|&r| r != i) {
            next_rest -= p.get(r);
        }
        if next.contains(&i) {
            out.push(budget - &next_rest);
        } else if next_rest > *budget {
            break;
        }
        held = next;
        rest = next_rest;
    }
    out
}

/// `B − p(S)` for every independent `S` of other modules that stays independent with `i`.
fn opt_thresholds(inst: &Instance, p: &PriceVector, i: usize) -> Result<Vec<Scalar>, SelectionError> {
    let n = inst.n();
    if n > OPT_AUDIT_CAP {
        return Err(SelectionError::TooLarge { n, cap: OPT_AUDIT_CAP });
    }
    let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << others.len()) {
        let mut set: Vec<usize> = others
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &j)| j)
            .collect();
        set.push(i);
        if inst.matroid().independent(&set) {
            set.pop();
            out.insert(inst.budget() - p.sum_over(&set));
        }
    }
    Ok(out.into_iter().collect())
}

fn exact_candidates(
    inst: &Instance,
    p: &PriceVector,
    i: usize,
    rule: Rule,
    tb: &TieBreak,
    eta: &Scalar,
) -> Result<BTreeSet<Scalar>, SelectionError> {
    let points = order_points(inst, p, i);
    let mut out: BTreeSet<Scalar> = points.iter().cloned().collect();
    let global = match rule {
        Rule::Opt => Some(opt_thresholds(inst, p, i)?),
        _ => None,
    };
    let half = Scalar::ratio(1, 2);
    for w in points.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let thresholds = match &global {
            Some(ts) => ts.clone(),
            None => {
                let mid = (lo + hi) * &half;
                let order = bpb_order(inst, &p.with(i, mid), tb);
                run_thresholds(inst, p, i, &order, &tb.ranks(inst), rule)
            }
        };
        let inside: Vec<Scalar> = thresholds.into_iter().filter(|t| t > lo && t < hi).collect();
        let floor = inside.iter().max().unwrap_or(lo);
        let nudge = Scalar::min_of(eta, &((hi - floor) * &half));
        out.insert(hi - nudge);
        out.extend(inside);
    }
    Ok(out)
}

/// Best unilateral deviation of every module, searched over `grid`. Passes iff no module
/// gains more than `eps`. Modules are audited in parallel.
pub fn verify_eps_equilibrium(
    inst: &Instance,
    p: &PriceVector,
    eps: &Scalar,
    rule: Rule,
    tb: &TieBreak,
    grid: &DevGrid,
) -> Result<DeviationReport, EquilibriumError> {
    check_len(p, inst.n())?;
    let eta = match grid {
        DevGrid::Exact => Some(default_eta(inst, p)),
        DevGrid::ExactWithEta(eta) => Some(eta.clone()),
        DevGrid::Explicit(lists) => {
            check_len(&PriceVector(vec![Scalar::zero(); lists.len()]), inst.n())?;
            None
        }
    };
    let current = rule.select(inst, p, tb)?;
    let modules = (0..inst.n())
        .into_par_iter()
        .map(|i| -> Result<ModuleDeviation, EquilibriumError> {
            let mut candidates = match (grid, &eta) {
                (DevGrid::Explicit(lists), _) => lists[i].iter().cloned().collect(),
                (_, Some(eta)) => exact_candidates(inst, p, i, rule, tb, eta)?,
                (_, None) => unreachable!("exact grids always carry a nudge"),
            };
            candidates.insert(inst.cost(i) + eps);
            candidates.insert(p.get(i).clone());
            let utility = if current.contains(i) {
                p.get(i) - inst.cost(i)
            } else {
                Scalar::zero()
            };
            let mut best_price = p.get(i).clone();
            let mut best_utility = utility.clone();
            for b in &candidates {
                let u = deviation_utility(inst, p, i, b, rule, tb)?;
                if u > best_utility {
                    best_utility = u;
                    best_price = b.clone();
                }
            }
            let gain = &best_utility - &utility;
            Ok(ModuleDeviation {
                module: i,
                price: p.get(i).clone(),
                profitable: gain > *eps,
                utility,
                best_price,
                best_utility,
                gain,
                candidates: candidates.len(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pass = modules.iter().all(|m| !m.profitable);
    Ok(DeviationReport {
        eps: eps.clone(),
        eta,
        modules,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::Matroid;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    fn sv(xs: &[&str]) -> Vec<Scalar> {
        xs.iter().map(|x| s(x)).collect()
    }

    fn pv(xs: &[&str]) -> PriceVector {
        PriceVector(sv(xs))
    }

    #[test]
    fn budget_spending_profile_is_equilibrium() {
        let inst = Instance::new(sv(&["1", "1"]), sv(&["0.1", "0.1"]), s("1"), Matroid::free(2)).unwrap();
        let report = verify_eps_equilibrium(
            &inst,
            &pv(&["0.5", "0.5"]),
            &Scalar::zero(),
            Rule::Bpb,
            &TieBreak::ByCostRatio,
            &DevGrid::Exact,
        )
        .unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn slack_budget_invites_raise() {
        let inst = Instance::new(sv(&["1", "1"]), sv(&["0.1", "0.1"]), s("1"), Matroid::free(2)).unwrap();
        let report = verify_eps_equilibrium(
            &inst,
            &pv(&["0.2", "0.2"]),
            &Scalar::zero(),
            Rule::Bpb,
            &TieBreak::ByCostRatio,
            &DevGrid::Exact,
        )
        .unwrap();
        assert!(!report.pass);
        // the closed threshold B − 0.2 is reached exactly
        assert_eq!(report.modules[0].best_price, s("0.8"));
        assert_eq!(report.modules[0].gain, s("0.6"));
    }

    #[test]
    fn open_end_is_approached_within_eta() {
        // module 0 stays first only while strictly cheaper than module 1's 0.3
        let inst = Instance::new(sv(&["1", "1"]), sv(&["0.1", "0.3"]), s("0.5"), Matroid::free(2)).unwrap();
        let p = pv(&["0.1", "0.3"]);
        let eta = s("1/1000");
        let report = verify_eps_equilibrium(
            &inst,
            &p,
            &Scalar::zero(),
            Rule::Bpb,
            &TieBreak::ByIndex,
            &DevGrid::ExactWithEta(eta),
        )
        .unwrap();
        // at 0.3 the index tie-break still favours module 0, and 0.3 + 0.3 > 0.5 rejects 1
        assert_eq!(report.modules[0].best_price, s("0.3"));
        let report = verify_eps_equilibrium(
            &inst,
            &p,
            &Scalar::zero(),
            Rule::Bpb,
            &TieBreak::Explicit(vec![1, 0]),
            &DevGrid::ExactWithEta(s("1/1000")),
        )
        .unwrap();
        // losing the tie at 0.3 leaves only the open approach from below
        assert_eq!(report.modules[0].best_price, s("0.299"));
    }

    #[test]
    fn optimal_rule_thresholds() {
        // above 0.7 module 0 no longer fits beside the more valuable module 1
        let inst = Instance::new(sv(&["1", "2"]), sv(&["0", "0"]), s("1"), Matroid::free(2)).unwrap();
        let report = verify_eps_equilibrium(
            &inst,
            &pv(&["0.3", "0.3"]),
            &Scalar::zero(),
            Rule::Opt,
            &TieBreak::ByIndex,
            &DevGrid::Exact,
        )
        .unwrap();
        assert_eq!(report.modules[0].best_price, s("0.7"));
    }

    #[test]
    fn explicit_grid() {
        let inst = Instance::new(sv(&["1"]), sv(&["0"]), s("1"), Matroid::free(1)).unwrap();
        let grid = DevGrid::Explicit(vec![sv(&["0.5", "0.9"])]);
        let report =
            verify_eps_equilibrium(&inst, &pv(&["0.5"]), &s("0.1"), Rule::Bpb, &TieBreak::ByIndex, &grid).unwrap();
        assert_eq!(report.modules[0].best_price, s("0.9"));
        assert!(!report.pass);
        assert_eq!(report.eta, None);
    }
}
