//! Buyer-side selection rules.
//!
//! * [`greedy_bpb`]: bang-per-buck greedy with circuit swaps, stopping at the first
//!   budget violation.
//! * [`greedy_knapsack`]: the unconstrained special case.
//! * [`greedy_skip`]: bang-per-buck greedy that skips matroid-infeasible modules.
//! * [`optimal_select`]: exhaustive search for the most valuable affordable independent set.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{BidGrid, Instance, PriceVector, SelectionResult, Swap};
use crate::scalar::Scalar;

/// Largest ground set [`optimal_select`] will enumerate by default.
pub const OPT_CAP: usize = 20;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SelectionError {
    #[error("the knapsack rule requires a free matroid, got {0}")]
    NotFree(&'static str),
    #[error("exhaustive search over {n} modules exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("tie-break permutation is not a bijection on {n} modules")]
    BadPermutation { n: usize },
}

/// How equal bang-per-buck ratios are ordered.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Higher `v/c` first, then lower index.
    #[default]
    ByCostRatio,
    ByIndex,
    /// Earlier position in the permutation first.
    Explicit(Vec<usize>),
}

impl TieBreak {
    pub fn explicit(perm: Vec<usize>, n: usize) -> Result<Self, SelectionError> {
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(SelectionError::BadPermutation { n });
        }
        for &i in &perm {
            if i >= n || seen[i] {
                return Err(SelectionError::BadPermutation { n });
            }
            seen[i] = true;
        }
        Ok(TieBreak::Explicit(perm))
    }

    /// `rank[i]` is module `i`'s position in the tie order.
    pub fn ranks(&self, inst: &Instance) -> Vec<usize> {
        let n = inst.n();
        let order: Vec<usize> = match self {
            TieBreak::ByIndex => (0..n).collect(),
            TieBreak::ByCostRatio => {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| {
                    bpb_cmp(inst.value(a), inst.cost(a), inst.value(b), inst.cost(b)).then(a.cmp(&b))
                });
                order
            }
            TieBreak::Explicit(perm) => perm.clone(),
        };
        let mut rank: Vec<usize> = (0..n).map(|i| n + i).collect();
        for (pos, &i) in order.iter().enumerate() {
            if i < n {
                rank[i] = pos;
            }
        }
        rank
    }
}

/// Orders two modules by bang-per-buck `v/p`, best first. A positive value at price zero
/// is infinitely good; a zero value is worst regardless of price.
pub fn bpb_cmp(va: &Scalar, pa: &Scalar, vb: &Scalar, pb: &Scalar) -> Ordering {
    fn class(v: &Scalar, p: &Scalar) -> u8 {
        if v.is_zero() {
            0
        } else if p.is_zero() {
            2
        } else {
            1
        }
    }
    match class(vb, pb).cmp(&class(va, pa)) {
        Ordering::Equal if class(va, pa) == 1 => (vb * pa).cmp(&(va * pb)),
        o => o,
    }
}

/// Modules sorted by descending `v/p`, ties resolved by `tb`.
pub fn bpb_order(inst: &Instance, p: &PriceVector, tb: &TieBreak) -> Vec<usize> {
    let rank = tb.ranks(inst);
    bpb_order_ranked(inst, p, &rank)
}

pub(crate) fn bpb_order_ranked(inst: &Instance, p: &PriceVector, rank: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&a, &b| bpb_cmp(inst.value(a), p.get(a), inst.value(b), p.get(b)).then(rank[a].cmp(&rank[b])));
    order
}

/// The circuit member to evict when a module closes a circuit: the lowest value, and
/// among equal values the one ranked last by the tie-break (`rank` from
/// [`TieBreak::ranks`]). Ranking by tie order rather than inspection order keeps the
/// choice stable when prices, and with them the inspection order, move.
pub(crate) fn eviction_choice(inst: &Instance, circuit: &[usize], rank: &[usize]) -> usize {
    *circuit
        .iter()
        .min_by(|&&a, &&b| inst.value(a).cmp(inst.value(b)).then(rank[b].cmp(&rank[a])))
        .expect("circuits are nonempty")
}

/// One step of the circuit-swap rule: the set that would replace `g` after inspecting
/// `e`, and the swap event if one happened. `None` means `e` is evicted immediately.
pub(crate) fn swap_step(inst: &Instance, g: &[usize], e: usize, rank: &[usize]) -> (Option<Vec<usize>>, Option<Swap>) {
    let m = inst.matroid();
    if !m.spans(g, e) {
        let mut next = g.to_vec();
        next.push(e);
        return (Some(next), None);
    }
    let circuit = m.circuit(g, e);
    let out = eviction_choice(inst, &circuit, rank);
    if out == e {
        return (None, None);
    }
    let mut next: Vec<usize> = g.iter().copied().filter(|&x| x != out).collect();
    next.push(e);
    (
        Some(next),
        Some(Swap {
            removed: out,
            added: e,
            circuit,
        }),
    )
}

fn finish(
    mut selected: Vec<usize>,
    spend: Scalar,
    order: Vec<usize>,
    swaps: Vec<Swap>,
    terminated_at: Option<usize>,
) -> SelectionResult {
    selected.sort_unstable();
    SelectionResult {
        selected,
        spend,
        inspection_order: order,
        swaps,
        terminated_at,
    }
}

/// Bang-per-buck greedy with circuit swaps.
///
/// A module spanned by the current set replaces the lowest-value member of the circuit
/// it closes. The first time the resulting set is over budget the run stops without
/// committing it.
pub fn greedy_bpb(inst: &Instance, p: &PriceVector, tb: &TieBreak) -> SelectionResult {
    let rank = tb.ranks(inst);
    let order = bpb_order_ranked(inst, p, &rank);
    greedy_bpb_in_order(inst, p, order, &rank)
}

pub(crate) fn greedy_bpb_in_order(
    inst: &Instance,
    p: &PriceVector,
    order: Vec<usize>,
    rank: &[usize],
) -> SelectionResult {
    let mut g: Vec<usize> = Vec::new();
    let mut spend = Scalar::zero();
    let mut swaps = Vec::new();
    let mut terminated_at = None;
    for &e in &order {
        let (next, swap) = swap_step(inst, &g, e, rank);
        let Some(next) = next else { continue };
        let next_spend = match &swap {
            Some(s) => &spend + p.get(e) - p.get(s.removed),
            None => &spend + p.get(e),
        };
        if next_spend > *inst.budget() {
            terminated_at = Some(e);
            break;
        }
        g = next;
        spend = next_spend;
        swaps.extend(swap);
    }
    finish(g, spend, order, swaps, terminated_at)
}

/// Bang-per-buck greedy without any matroid constraint.
pub fn greedy_knapsack(inst: &Instance, p: &PriceVector, tb: &TieBreak) -> Result<SelectionResult, SelectionError> {
    if !inst.matroid().is_free() {
        return Err(SelectionError::NotFree(inst.matroid().family_name()));
    }
    Ok(greedy_skip(inst, p, tb))
}

/// Bang-per-buck greedy that passes over modules whose addition breaks independence.
pub fn greedy_skip(inst: &Instance, p: &PriceVector, tb: &TieBreak) -> SelectionResult {
    let order = bpb_order(inst, p, tb);
    greedy_skip_in_order(inst, p, order)
}

pub(crate) fn greedy_skip_in_order(inst: &Instance, p: &PriceVector, order: Vec<usize>) -> SelectionResult {
    let m = inst.matroid();
    let mut g: Vec<usize> = Vec::new();
    let mut spend = Scalar::zero();
    let mut terminated_at = None;
    for &e in &order {
        if !m.independent_with(&g, e) {
            continue;
        }
        let next_spend = &spend + p.get(e);
        if next_spend > *inst.budget() {
            terminated_at = Some(e);
            break;
        }
        g.push(e);
        spend = next_spend;
    }
    finish(g, spend, order, Vec::new(), terminated_at)
}

/// The most valuable independent set with `p(S) <= B`; among equally valuable sets the
/// lexicographically smallest (as ascending id lists) wins.
pub fn optimal_select(inst: &Instance, p: &PriceVector) -> Result<SelectionResult, SelectionError> {
    optimal_select_capped(inst, p, OPT_CAP)
}

pub fn optimal_select_capped(inst: &Instance, p: &PriceVector, cap: usize) -> Result<SelectionResult, SelectionError> {
    let n = inst.n();
    if n > cap {
        return Err(SelectionError::TooLarge { n, cap });
    }
    let mut suffix_value = vec![Scalar::zero(); n + 1];
    for i in (0..n).rev() {
        suffix_value[i] = &suffix_value[i + 1] + inst.value(i);
    }
    let mut search = OptSearch {
        inst,
        p,
        suffix_value,
        current: Vec::new(),
        best: Vec::new(),
        best_value: Scalar::zero(),
    };
    search.descend(0, Scalar::zero(), Scalar::zero());
    let best = search.best;
    let spend = p.sum_over(&best);
    Ok(finish(best.clone(), spend, best, Vec::new(), None))
}

struct OptSearch<'a> {
    inst: &'a Instance,
    p: &'a PriceVector,
    suffix_value: Vec<Scalar>,
    current: Vec<usize>,
    best: Vec<usize>,
    best_value: Scalar,
}

impl OptSearch<'_> {
    fn descend(&mut self, next: usize, spend: Scalar, value: Scalar) {
        if next == self.inst.n() {
            match value.cmp(&self.best_value) {
                Ordering::Greater => {}
                Ordering::Equal if self.current < self.best => {}
                _ => return,
            }
            self.best_value = value;
            self.best = self.current.clone();
            return;
        }
        if &value + &self.suffix_value[next] < self.best_value {
            return;
        }
        let with_spend = &spend + self.p.get(next);
        if with_spend <= *self.inst.budget() && self.inst.matroid().independent_with(&self.current, next) {
            self.current.push(next);
            let with_value = &value + self.inst.value(next);
            self.descend(next + 1, with_spend, with_value);
            self.current.pop();
        }
        self.descend(next + 1, spend, value);
    }
}

/// A selection rule the buyer may run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Rule {
    #[default]
    Bpb,
    Knapsack,
    Skip,
    Opt,
}

impl Rule {
    pub fn select(self, inst: &Instance, p: &PriceVector, tb: &TieBreak) -> Result<SelectionResult, SelectionError> {
        match self {
            Rule::Bpb => Ok(greedy_bpb(inst, p, tb)),
            Rule::Knapsack => greedy_knapsack(inst, p, tb),
            Rule::Skip => Ok(greedy_skip(inst, p, tb)),
            Rule::Opt => optimal_select(inst, p),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::Bpb => "bpb",
            Rule::Knapsack => "knapsack",
            Rule::Skip => "skip",
            Rule::Opt => "opt",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bpb" => Ok(Rule::Bpb),
            "knapsack" => Ok(Rule::Knapsack),
            "skip" => Ok(Rule::Skip),
            "opt" => Ok(Rule::Opt),
            other => Err(format!("unknown rule `{other}` (expected bpb, knapsack, skip or opt)")),
        }
    }
}

/// The largest grid bid at which module `i` is selected while the others keep their
/// prices in `p`. Every grid point is tried since selection need not be monotone in the
/// module's own price.
pub fn critical_price(
    inst: &Instance,
    p: &PriceVector,
    i: usize,
    grid: &BidGrid,
    rule: Rule,
    tb: &TieBreak,
) -> Result<Option<Scalar>, SelectionError> {
    let hits: Vec<Option<Scalar>> = grid
        .bids()
        .par_iter()
        .map(|b| {
            rule.select(inst, &p.with(i, b.clone()), tb)
                .map(|sel| sel.contains(i).then(|| b.clone()))
        })
        .collect::<Result<_, _>>()?;
    Ok(hits.into_iter().flatten().max())
}
