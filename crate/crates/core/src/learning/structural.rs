//! Randomized checks of three structural facts about weighted-construction prices `p̄`,
//! with `S` the set selected at `p̄` and `S′ = S ∪ {k*}` where `k*` is the module
//! inspected in the construction's last iteration:
//!
//! * own-price dominance: a module of `S` selected at some price below `p̄(i)` is still
//!   selected at `p̄(i)`, whatever the others bid;
//! * worst-bang-per-buck rejection: if every module of `S′` bids at least its `p̄`, the
//!   module of `S′` with the lowest bang-per-buck is rejected, and the greedy runs out of
//!   budget no later than the moment it reaches that module. (The greedy may stop before
//!   it, so the final selection plus that module can still fit the budget.)
//! * local stability: if every module of `S′` bids within `10δ` of its `p̄`, each module
//!   of `S` is selected at `p̄(i)` and rejected at `p̄(i) − 10δ + √δ`.
//!
//! Modules outside the constrained set bid anywhere in `[c(j), B]`. Sampled prices are
//! exact rationals on a fine grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equilibrium::EquilibriumOutput;
use crate::model::{Instance, PriceVector};
use crate::scalar::Scalar;
use crate::selection::{greedy_bpb, TieBreak};

use super::LearningError;

/// Sampling resolution within each price interval.
const RESOLUTION: i64 = 10_000;
/// Give up on a check after this many draws per requested trial.
const PATIENCE: usize = 50;
/// Witnesses kept per check.
const KEEP: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructuralViolation {
    pub module: usize,
    pub witness: PriceVector,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructuralCheck {
    pub name: &'static str,
    /// Draws that met the hypothesis and were checked.
    pub checked: usize,
    /// Draws discarded because the hypothesis failed.
    pub skipped: usize,
    pub violation_count: usize,
    /// The first few counterexamples.
    pub violations: Vec<StructuralViolation>,
}

impl StructuralCheck {
    fn new(name: &'static str) -> Self {
        StructuralCheck {
            name,
            checked: 0,
            skipped: 0,
            violation_count: 0,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, module: usize, witness: &PriceVector, detail: String) {
        self.violation_count += 1;
        if self.violations.len() < KEEP {
            self.violations.push(StructuralViolation {
                module,
                witness: witness.clone(),
                detail,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructuralReport {
    pub own_price_dominance: StructuralCheck,
    pub worst_bpb_rejected: StructuralCheck,
    pub local_stability: StructuralCheck,
}

impl StructuralReport {
    pub fn checks(&self) -> [&StructuralCheck; 3] {
        [
            &self.own_price_dominance,
            &self.worst_bpb_rejected,
            &self.local_stability,
        ]
    }

    pub fn violations(&self) -> usize {
        self.checks().iter().map(|c| c.violation_count).sum()
    }
}

/// Uniform on `[lo, hi]` (or `[lo, hi)` when `open`) at the sampling resolution.
fn draw(rng: &mut ChaCha8Rng, lo: &Scalar, hi: &Scalar, open: bool) -> Scalar {
    let top = if open { RESOLUTION - 1 } else { RESOLUTION };
    let k = rng.random_range(0..=top);
    lo + (hi - lo) * Scalar::ratio(k, RESOLUTION)
}

struct Setup<'a> {
    inst: &'a Instance,
    target: &'a PriceVector,
    selected: &'a [usize],
    extended: Vec<usize>,
    tb: &'a TieBreak,
}

impl Setup<'_> {
    /// Every module outside `fixed` drawn from `[c(j), B]`.
    fn background(&self, rng: &mut ChaCha8Rng, fixed: &[usize]) -> PriceVector {
        let budget = self.inst.budget();
        PriceVector(
            (0..self.inst.n())
                .map(|j| {
                    if fixed.contains(&j) {
                        self.target.get(j).clone()
                    } else {
                        draw(rng, self.inst.cost(j), budget, false)
                    }
                })
                .collect(),
        )
    }

    fn selects(&self, p: &PriceVector, i: usize) -> bool {
        greedy_bpb(self.inst, p, self.tb).contains(i)
    }
}

fn own_price_dominance(setup: &Setup, rng: &mut ChaCha8Rng, trials: usize) -> StructuralCheck {
    let mut check = StructuralCheck::new("own_price_dominance");
    if setup.selected.is_empty() {
        return check;
    }
    for _ in 0..trials * PATIENCE {
        if check.checked == trials {
            break;
        }
        let i = setup.selected[rng.random_range(0..setup.selected.len())];
        let (cost, bar) = (setup.inst.cost(i), setup.target.get(i));
        let mut p = setup.background(rng, &[]);
        if cost >= bar {
            check.skipped += 1;
            continue;
        }
        p.0[i] = draw(rng, cost, bar, true);
        if !setup.selects(&p, i) {
            check.skipped += 1;
            continue;
        }
        check.checked += 1;
        let raised = p.with(i, bar.clone());
        if !setup.selects(&raised, i) {
            check.record(i, &p, format!("selected at {} but not at {bar}", p.get(i)));
        }
    }
    check
}

fn worst_bpb_rejected(setup: &Setup, rng: &mut ChaCha8Rng, trials: usize) -> StructuralCheck {
    let mut check = StructuralCheck::new("worst_bpb_rejected");
    if setup.selected.is_empty() {
        return check;
    }
    let inst = setup.inst;
    let budget = inst.budget();
    for _ in 0..trials {
        let mut p = setup.background(rng, &setup.extended);
        for &j in &setup.extended {
            let bar = setup.target.get(j);
            p.0[j] = draw(rng, bar, &Scalar::max_of(bar, budget), false);
        }
        let worst = setup
            .extended
            .iter()
            .copied()
            .min_by(|&a, &b| (inst.value(a) / p.get(a)).cmp(&(inst.value(b) / p.get(b))))
            .expect("extended set is non-empty");
        check.checked += 1;
        let sel = greedy_bpb(inst, &p, setup.tb);
        let position = |x: usize| sel.inspection_order.iter().position(|&y| y == x);
        let stopped_in_time = match (sel.terminated_at, position(worst)) {
            (Some(t), Some(w)) => position(t).is_some_and(|t| t <= w),
            (Some(_), None) => true,
            (None, _) => false,
        };
        if sel.contains(worst) {
            check.record(
                worst,
                &p,
                format!("module {} has the worst bang-per-buck yet is selected", worst + 1),
            );
        } else if !stopped_in_time {
            check.record(
                worst,
                &p,
                format!(
                    "module {} is rejected but the budget never ran out before it",
                    worst + 1
                ),
            );
        }
    }
    check
}

fn local_stability(
    setup: &Setup,
    rng: &mut ChaCha8Rng,
    trials: usize,
    delta: &Scalar,
    root: &Scalar,
) -> StructuralCheck {
    let mut check = StructuralCheck::new("local_stability");
    if setup.selected.is_empty() {
        return check;
    }
    let inst = setup.inst;
    let band = Scalar::from_int(10) * delta;
    for _ in 0..trials {
        let mut p = setup.background(rng, &setup.extended);
        for &j in &setup.extended {
            let bar = setup.target.get(j);
            let lo = Scalar::max_of(inst.cost(j), &(bar - &band));
            let hi = Scalar::max_of(&lo, &Scalar::min_of(inst.budget(), &(bar + &band)));
            p.0[j] = draw(rng, &lo, &hi, false);
        }
        check.checked += 1;
        for &i in setup.selected {
            let bar = setup.target.get(i);
            if !setup.selects(&p.with(i, bar.clone()), i) {
                check.record(
                    i,
                    &p,
                    format!("module {} rejected at its equilibrium price {bar}", i + 1),
                );
                continue;
            }
            let high = bar - &band + root;
            if setup.selects(&p.with(i, high.clone()), i) {
                check.record(i, &p, format!("module {} still selected at {high}", i + 1));
            }
        }
    }
    check
}

/// Runs the three checks, each on `trials` price vectors meeting its hypothesis (fewer
/// if the hypothesis is too rare). `eq` must come from the weighted construction and
/// `delta` must be a rational square.
pub fn check_structural_lemmas(
    inst: &Instance,
    eq: &EquilibriumOutput,
    delta: &Scalar,
    trials: usize,
    seed: u64,
    tb: &TieBreak,
) -> Result<StructuralReport, LearningError> {
    let root = delta
        .exact_sqrt()
        .filter(|r| r.is_positive())
        .ok_or_else(|| LearningError::Config(format!("δ = {delta} must be the square of a positive rational")))?;
    if eq.prices.len() != inst.n() {
        return Err(LearningError::Config(format!(
            "equilibrium has {} prices for {} modules",
            eq.prices.len(),
            inst.n()
        )));
    }
    let mut extended = eq.selected.clone();
    if let Some(last) = eq.trace.last() {
        if !extended.contains(&last.inspected) {
            extended.push(last.inspected);
        }
    }
    let setup = Setup {
        inst,
        target: &eq.prices,
        selected: &eq.selected,
        extended,
        tb,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(StructuralReport {
        own_price_dominance: own_price_dominance(&setup, &mut rng, trials),
        worst_bpb_rejected: worst_bpb_rejected(&setup, &mut rng, trials),
        local_stability: local_stability(&setup, &mut rng, trials, delta, &root),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::construct_eq_weighted;
    use crate::generate::FamilySpec;
    use crate::learning::{strict_instance, StrictSpec};
    use crate::matroid::Matroid;
    use crate::selection::greedy_knapsack;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    #[test]
    fn strict_instances_show_no_violations() {
        let tb = TieBreak::ByCostRatio;
        for (seed, family) in [
            (1, FamilySpec::Free),
            (2, FamilySpec::Uniform { k: 2 }),
            (3, FamilySpec::Graphic { vertices: 3 }),
        ] {
            let spec = StrictSpec { n: 3, q: 2000, family };
            let inst = strict_instance(&spec, seed).unwrap();
            let eq = construct_eq_weighted(&inst, &tb).unwrap();
            let report = check_structural_lemmas(&inst, &eq, &spec.delta(), 200, seed, &tb).unwrap();
            assert_eq!(report.violations(), 0, "{report:?}");
            assert!(report.checks().iter().all(|c| c.checked > 0), "{report:?}");
        }
    }

    #[test]
    fn free_matroid_dominance_is_order_monotonicity() {
        // with a free matroid the swap greedy is the knapsack greedy, so raising a
        // selected module toward p̄ only moves it later in one fixed order
        let tb = TieBreak::ByCostRatio;
        let spec = StrictSpec {
            n: 3,
            q: 30,
            family: FamilySpec::Free,
        };
        let inst = strict_instance(&spec, 7).unwrap();
        let eq = construct_eq_weighted(&inst, &tb).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let p = PriceVector(
                inst.costs()
                    .iter()
                    .map(|c| draw(&mut rng, c, inst.budget(), false))
                    .collect(),
            );
            assert_eq!(
                greedy_bpb(&inst, &p, &tb).selected,
                greedy_knapsack(&inst, &p, &tb).unwrap().selected
            );
        }
        let report = check_structural_lemmas(&inst, &eq, &spec.delta(), 200, 7, &tb).unwrap();
        assert_eq!(report.own_price_dominance.violation_count, 0);
    }

    #[test]
    fn wrong_target_is_caught() {
        let tb = TieBreak::ByCostRatio;
        let inst = Instance::new(vec![s("1"), s("1")], vec![s("0.2"), s("0.3")], s("1"), Matroid::free(2)).unwrap();
        let mut eq = construct_eq_weighted(&inst, &tb).unwrap();
        assert_eq!(eq.prices.0, vec![s("1/2"), s("1/2")]);
        // a module priced far below its true equilibrium keeps being selected past p̄ − 10δ + √δ
        eq.prices.0[0] = s("0.3");
        let report = check_structural_lemmas(&inst, &eq, &s("1/400"), 50, 0, &tb).unwrap();
        assert!(report.local_stability.violation_count > 0);
        assert!(!report.local_stability.violations.is_empty());
    }

    #[test]
    fn irrational_root_is_refused() {
        let tb = TieBreak::ByCostRatio;
        let inst = Instance::new(vec![s("1"), s("1")], vec![s("0.2"), s("0.3")], s("1"), Matroid::free(2)).unwrap();
        let eq = construct_eq_weighted(&inst, &tb).unwrap();
        assert!(check_structural_lemmas(&inst, &eq, &s("0.05"), 10, 0, &tb).is_err());
    }
}
