//! The cost-known optimum, measured approximation ratios, and the closed-form guarantees
//! they are compared against.
//!
//! The bound functions return `None` outside the parameter range where the expression is
//! defined (denominators that vanish or turn negative).

use std::cmp::Ordering;

use crate::model::{Instance, PriceVector};
use crate::scalar::Scalar;
use crate::selection::{bpb_order, greedy_bpb, greedy_skip, optimal_select_capped, Rule, TieBreak, OPT_CAP};

use super::{check_len, EquilibriumError};

/// The most valuable affordable independent set at true costs, and its value.
pub fn opt_with_costs(inst: &Instance) -> Result<(Vec<usize>, Scalar), EquilibriumError> {
    opt_with_costs_capped(inst, OPT_CAP)
}

pub fn opt_with_costs_capped(inst: &Instance, cap: usize) -> Result<(Vec<usize>, Scalar), EquilibriumError> {
    let sel = optimal_select_capped(inst, &inst.cost_prices(), cap)?;
    let value = inst.value_of(&sel.selected);
    Ok((sel.selected, value))
}

/// The same optimum by branch and bound, without a size cap. Modules are tried in
/// descending `v/c`; a branch is cut when its value plus an upper bound on the undecided
/// modules cannot beat the incumbent. The bound is the smaller of the fractional knapsack
/// (ignoring the matroid) and the best independent extension by value (ignoring the
/// budget). Exponential in the worst case.
pub fn opt_with_costs_bnb(inst: &Instance) -> (Vec<usize>, Scalar) {
    let order = bpb_order(inst, &inst.cost_prices(), &TieBreak::ByIndex);
    let mut cost_prefix = vec![Scalar::zero()];
    let mut value_prefix = vec![Scalar::zero()];
    for &i in &order {
        cost_prefix.push(cost_prefix.last().unwrap() + inst.cost(i));
        value_prefix.push(value_prefix.last().unwrap() + inst.value(i));
    }
    let seed = greedy_skip(inst, &inst.cost_prices(), &TieBreak::ByIndex).selected;
    let mut position = vec![0; inst.n()];
    for (k, &i) in order.iter().enumerate() {
        position[i] = k;
    }
    let mut by_value: Vec<usize> = (0..inst.n()).collect();
    by_value.sort_by(|&a, &b| inst.value(b).cmp(inst.value(a)));
    let mut search = Bnb {
        inst,
        position,
        by_value,
        best_value: inst.value_of(&seed),
        best: seed,
        order,
        cost_prefix,
        value_prefix,
        current: Vec::new(),
    };
    search.descend(0, Scalar::zero(), Scalar::zero());
    let mut best = search.best;
    best.sort_unstable();
    let value = search.best_value;
    (best, value)
}

struct Bnb<'a> {
    inst: &'a Instance,
    position: Vec<usize>,
    by_value: Vec<usize>,
    order: Vec<usize>,
    cost_prefix: Vec<Scalar>,
    value_prefix: Vec<Scalar>,
    current: Vec<usize>,
    best: Vec<usize>,
    best_value: Scalar,
}

impl Bnb<'_> {
    /// Value of the fractional knapsack over `order[k..]` with `room` budget left.
    fn relaxation(&self, k: usize, room: &Scalar) -> Scalar {
        let n = self.order.len();
        let limit = &self.cost_prefix[k] + room;
        // last position whose prefix cost still fits
        let fit = k + self.cost_prefix[k + 1..=n].partition_point(|c| *c <= limit);
        let mut bound = &self.value_prefix[fit] - &self.value_prefix[k];
        if fit < n {
            let next = self.order[fit];
            let left = &limit - &self.cost_prefix[fit];
            bound += left * self.inst.value(next) / self.inst.cost(next);
        }
        bound
    }

    /// Value of the heaviest independent extension of the current set by `order[k..]`;
    /// exact for a matroid.
    fn extension(&self, k: usize) -> Scalar {
        let mut held = self.current.clone();
        let mut gain = Scalar::zero();
        for &e in self.by_value.iter().filter(|&&e| self.position[e] >= k) {
            if self.inst.matroid().independent_with(&held, e) {
                held.push(e);
                gain += self.inst.value(e);
            }
        }
        gain
    }

    fn descend(&mut self, k: usize, spend: Scalar, value: Scalar) {
        if value > self.best_value {
            self.best_value = value.clone();
            self.best = self.current.clone();
        }
        if k == self.order.len() {
            return;
        }
        let room = self.inst.budget() - &spend;
        let mut bound = self.relaxation(k, &room);
        if &value + &bound <= self.best_value {
            return;
        }
        if !self.inst.matroid().is_free() {
            bound = Scalar::min_of(&bound, &self.extension(k));
            if &value + &bound <= self.best_value {
                return;
            }
        }
        let i = self.order[k];
        let with_spend = &spend + self.inst.cost(i);
        if with_spend <= *self.inst.budget() && self.inst.matroid().independent_with(&self.current, i) {
            self.current.push(i);
            let with_value = &value + self.inst.value(i);
            self.descend(k + 1, with_spend, with_value);
            self.current.pop();
        }
        self.descend(k + 1, spend, value);
    }
}

/// `v(rule(p)) / OPT`, or one when the optimum is worthless.
pub fn approx_ratio(inst: &Instance, p: &PriceVector, rule: Rule, tb: &TieBreak) -> Result<Scalar, EquilibriumError> {
    check_len(p, inst.n())?;
    let (_, opt) = opt_with_costs(inst)?;
    if opt.is_zero() {
        return Ok(Scalar::one());
    }
    let sel = rule.select(inst, p, tb)?;
    Ok(inst.value_of(&sel.selected) / opt)
}

fn one() -> Scalar {
    Scalar::one()
}

/// `1 + λ/(1 − λ)`: the cost-known greedy against the optimum.
pub fn small_cost_bound(lambda: &Scalar) -> Option<Scalar> {
    let rest = one() - lambda;
    rest.is_positive().then(|| one() + lambda / rest)
}

/// Bound on `v(OPT)/v(S_p)` for ε-equilibria of an additive buyer whose costs lie in
/// `[m, λB − ε]`: `(2 + ε/m + (1 + ε/m)·λ/(1 − λ))·(1 + λ/(1 − λ))`.
pub fn bound_additive(lambda: &Scalar, eps: &Scalar, min_cost: &Scalar) -> Option<Scalar> {
    if !min_cost.is_positive() {
        return None;
    }
    let greedy = small_cost_bound(lambda)?;
    let rel = eps / min_cost;
    let tail = lambda / (one() - lambda);
    Some((Scalar::from_int(2) + &rel + (one() + &rel) * tail) * greedy)
}

/// Bound on `|OPT|/|S_p|` for unit values under a matroid:
/// `(1 + λ/(1 − λ))·(1 + (λ + ε/B)/(λ·(1 − λ − ε/B)))`.
pub fn bound_unit_values(lambda: &Scalar, eps: &Scalar, budget: &Scalar) -> Option<Scalar> {
    let greedy = small_cost_bound(lambda)?;
    let rel = eps / budget;
    let room = one() - lambda - &rel;
    if !lambda.is_positive() || !room.is_positive() {
        return None;
    }
    Some(greedy * (one() + (lambda + rel) / (lambda * room)))
}

/// Bound on `v(OPT)/v(S_p)` for weighted matroids, `λ < 1/3`:
/// `(1 + 2λ/(1 − 3λ) + (1 + ε/(λB))/(1 − λ − ε/B))·(1 + λ/(1 − λ))`.
pub fn bound_weighted(lambda: &Scalar, eps: &Scalar, budget: &Scalar) -> Option<Scalar> {
    let greedy = small_cost_bound(lambda)?;
    let third = one() - Scalar::from_int(3) * lambda;
    let rel = eps / budget;
    let room = one() - lambda - &rel;
    if !lambda.is_positive() || !third.is_positive() || !room.is_positive() {
        return None;
    }
    let inner = one() + Scalar::from_int(2) * lambda / third + (one() + &rel / lambda) / room;
    Some(inner * greedy)
}

/// `(1 − 3λ)²/(2 − 3λ)`, the limiting value fraction for weighted matroids as ε → 0.
pub fn simplified_weighted_ratio(lambda: &Scalar) -> Option<Scalar> {
    let third = one() - Scalar::from_int(3) * lambda;
    let den = Scalar::from_int(2) - Scalar::from_int(3) * lambda;
    (third.is_positive() && den.is_positive()).then(|| &third * &third / den)
}

/// Among selected modules, `v(i)/(p(i) + ε) <= v(j)/p(j)` for every pair. Returns the
/// first offending pair `(i, j)`.
pub fn check_equal_bpb(inst: &Instance, p: &PriceVector, eps: &Scalar, tb: &TieBreak) -> Option<(usize, usize)> {
    let sel = greedy_bpb(inst, p, tb);
    let raised = |i: usize| p.get(i) + eps;
    for &i in &sel.selected {
        for &j in sel.selected.iter().filter(|&&j| j != i) {
            if inst.value(i) * p.get(j) > inst.value(j) * raised(i) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Either the selection spends at least `B − ε`, or no selected module raised by `ε`
/// beats the cost bang-per-buck of the module the greedy stopped on.
pub fn check_bpb_tightness(inst: &Instance, p: &PriceVector, eps: &Scalar, tb: &TieBreak) -> bool {
    let sel = greedy_bpb(inst, p, tb);
    if sel.spend >= inst.budget() - eps {
        return true;
    }
    let Some(next) = sel.terminated_at else { return true };
    sel.selected.iter().all(|&i| {
        crate::selection::bpb_cmp(inst.value(i), &(p.get(i) + eps), inst.value(next), inst.cost(next)) != Ordering::Less
    })
}

/// `p(S_p) >= (1 − λ)·B − ε`.
pub fn check_spend_floor(inst: &Instance, p: &PriceVector, eps: &Scalar, lambda: &Scalar, tb: &TieBreak) -> bool {
    let sel = greedy_bpb(inst, p, tb);
    sel.spend >= (one() - lambda) * inst.budget() - eps
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

    #[test]
    fn optimum_of_small_instances() {
        let inst = Instance::new(sv(&["1.1", "1", "1"]), sv(&["0", "0", "0"]), s("1"), Matroid::free(3)).unwrap();
        assert_eq!(opt_with_costs(&inst).unwrap(), (vec![0, 1, 2], s("3.1")));
        let fig = Instance::relaxed(
            sv(&["1", "3", "7", "1"]),
            sv(&["0", "2.5", "4.5", "4"]),
            s("4.4"),
            Matroid::free(4),
        )
        .unwrap();
        assert_eq!(opt_with_costs(&fig).unwrap(), (vec![0, 1], s("4")));
    }

    #[test]
    fn branch_and_bound_agrees_with_exhaustive_search() {
        use crate::generate::{generate_instance, FamilySpec, GenSpec};
        for seed in 0..40 {
            let family = [
                FamilySpec::Free,
                FamilySpec::Uniform { k: 4 },
                FamilySpec::Graphic { vertices: 5 },
            ][seed as usize % 3];
            let spec = GenSpec::new(12, s("0.3"), family);
            let inst = generate_instance(&spec, seed).unwrap();
            let (set, value) = opt_with_costs_bnb(&inst);
            assert_eq!(value, opt_with_costs(&inst).unwrap().1, "seed {seed}");
            assert_eq!(inst.value_of(&set), value);
            assert!(inst.cost_of(&set) <= *inst.budget() && inst.matroid().independent(&set));
        }
    }

    #[test]
    fn optimal_rule_ratio_on_unit_prices() {
        let inst = Instance::new(sv(&["1.1", "1", "1"]), sv(&["0", "0", "0"]), s("1"), Matroid::free(3)).unwrap();
        let p = PriceVector(sv(&["1", "1", "1"]));
        assert_eq!(
            approx_ratio(&inst, &p, Rule::Opt, &TieBreak::ByIndex).unwrap(),
            s("11/31")
        );
    }

    #[test]
    fn closed_forms() {
        let l = s("0.05");
        assert_eq!(small_cost_bound(&l), Some(s("20/19")));
        assert_eq!(simplified_weighted_ratio(&l), Some(s("0.7225") / s("1.85")));
        // ε → 0 limit of the additive bound is (2 − λ)/(1 − λ)²
        assert_eq!(
            bound_additive(&l, &Scalar::zero(), &s("0.01")),
            Some(s("1.95") / s("0.9025"))
        );
        assert_eq!(bound_weighted(&s("0.4"), &Scalar::zero(), &s("1")), None);
        assert_eq!(bound_unit_values(&Scalar::zero(), &s("0.1"), &s("1")), None);
        let w = bound_weighted(&l, &Scalar::zero(), &s("1")).unwrap();
        assert_eq!(w, (s("1") + s("0.1") / s("0.85") + s("1") / s("0.95")) * s("20/19"));
    }

    #[test]
    fn equilibrium_checks() {
        let inst = Instance::new(
            sv(&["1", "1", "1"]),
            sv(&["0.1", "0.1", "0.5"]),
            s("1"),
            Matroid::free(3),
        )
        .unwrap();
        let tb = TieBreak::ByCostRatio;
        let p = PriceVector(sv(&["0.5", "0.5", "0.5"]));
        assert_eq!(check_equal_bpb(&inst, &p, &s("0.01"), &tb), None);
        assert!(check_bpb_tightness(&inst, &p, &s("0.01"), &tb));
        assert!(check_spend_floor(&inst, &p, &s("0.01"), &inst.lambda_max(), &tb));
        let lopsided = PriceVector(sv(&["0.2", "0.4", "0.5"]));
        assert_eq!(check_equal_bpb(&inst, &lopsided, &s("0.01"), &tb), Some((0, 1)));
    }
}
