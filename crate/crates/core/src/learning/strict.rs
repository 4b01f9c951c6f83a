//! The parameter regime of the convergence argument: unit budget, `δ < 1/n³` and every
//! cost above `δ^{1/3}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::construct_eq_weighted;
use crate::generate::{generate_instance, FamilySpec, GenError, GenSpec};
use crate::model::{BidGrid, GridError, Instance};
use crate::scalar::Scalar;
use crate::selection::TieBreak;

use super::LearningError;

const ATTEMPTS: usize = 1000;

fn strict(step: &Scalar, rule: &str) -> GridError {
    GridError::Strict {
        step: step.clone(),
        rule: rule.to_string(),
    }
}

fn cube(x: &Scalar) -> Scalar {
    x * x * x
}

/// Unit budget, `δ·n³ < 1` and `c(i)³ > δ` for every module, all decided exactly.
pub fn check_strict_assumptions(inst: &Instance, grid: &BidGrid) -> Result<(), GridError> {
    check_strict_step(inst, grid.step())
}

/// [`check_strict_assumptions`] without materializing the grid.
fn check_strict_step(inst: &Instance, step: &Scalar) -> Result<(), GridError> {
    if *inst.budget() != Scalar::one() {
        return Err(strict(step, "a unit budget"));
    }
    let n = Scalar::from_int(inst.n() as i64);
    if step * cube(&n) >= Scalar::one() {
        return Err(strict(step, "δ < 1/n³"));
    }
    if let Some(i) = inst.costs().iter().position(|c| cube(c) <= *step) {
        return Err(strict(step, &format!("c({}) > δ^(1/3)", i + 1)));
    }
    Ok(())
}

/// The smallest multiple of 1/1000 whose cube exceeds `delta`, if one is at most 1.
pub fn cost_floor(delta: &Scalar) -> Option<Scalar> {
    (1..=1000).map(|k| Scalar::ratio(k, 1000)).find(|r| cube(r) > *delta)
}

/// Random strict-regime instances with `δ = 1/q²`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrictSpec {
    pub n: usize,
    pub q: u32,
    pub family: FamilySpec,
}

impl StrictSpec {
    pub fn delta(&self) -> Scalar {
        let q = i64::from(self.q);
        Scalar::ratio(1, q * q)
    }
}

/// Draws instances until one meets the regime: unit budget, values in `[1, n²]`, costs in
/// `(δ^{1/3}, min{1, 2/n}]`, and a weighted-construction equilibrium `p̄` that prices
/// every selected module below the budget and, when it leaves budget unspent, puts the
/// rejected module's cost at least `2√δ` past the budget.
pub fn strict_instance(spec: &StrictSpec, seed: u64) -> Result<Instance, LearningError> {
    let n = spec.n;
    let delta = spec.delta();
    let cubed = cube(&Scalar::from_int(n as i64));
    if &delta * &cubed >= Scalar::one() {
        return Err(LearningError::Config(format!("q = {} needs q² > n³ = {cubed}", spec.q)));
    }
    let floor = cost_floor(&delta).ok_or_else(|| LearningError::Config(format!("no cost floor for δ = {delta}")))?;
    let top = Scalar::min_of(&Scalar::one(), &Scalar::ratio(2, n as i64));
    let square = Scalar::from_int((n * n) as i64);
    let gen = GenSpec {
        n,
        lambda: top,
        min_cost: floor,
        budget: Scalar::one(),
        values: (Scalar::one(), square.clone()),
        unit_values: false,
        family: spec.family,
    };
    let four_delta = Scalar::from_int(4) * &delta;
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..ATTEMPTS {
        let inst = generate_instance(&gen, seeds.random())?;
        if inst.values().iter().any(|v| *v < Scalar::one() || *v > square) {
            continue;
        }
        if check_strict_step(&inst, &delta).is_err() {
            continue;
        }
        let eq = construct_eq_weighted(&inst, &TieBreak::ByCostRatio)?;
        if eq.selected.is_empty() || eq.selected.iter().any(|&i| eq.prices.get(i) >= inst.budget()) {
            continue;
        }
        let spend = eq.prices.sum_over(&eq.selected);
        if spend < *inst.budget() {
            let Some(last) = eq.trace.last() else { continue };
            let over = spend + eq.prices.get(last.inspected) - inst.budget();
            if !over.is_positive() || &over * &over <= four_delta {
                continue;
            }
        }
        return Ok(inst);
    }
    Err(GenError::Exhausted(ATTEMPTS).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::Matroid;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    #[test]
    fn floor_cube_exceeds_delta() {
        let delta = s("1/900");
        let r = cost_floor(&delta).unwrap();
        assert!(cube(&r) > delta);
        assert!(cube(&(&r - s("0.001"))) <= delta);
        assert_eq!(r, s("0.104"));
    }

    #[test]
    fn assumptions_checked_exactly() {
        let inst = Instance::new(vec![s("1"), s("1")], vec![s("0.3"), s("0.5")], s("1"), Matroid::free(2)).unwrap();
        assert!(check_strict_assumptions(&inst, &BidGrid::new(s("1/100"), inst.budget()).unwrap()).is_ok());
        // 8δ = 1 is not below one
        assert!(check_strict_assumptions(&inst, &BidGrid::new(s("1/8"), inst.budget()).unwrap()).is_err());
        // 0.3³ = 0.027 <= 1/25
        assert!(check_strict_assumptions(&inst, &BidGrid::new(s("1/25"), inst.budget()).unwrap()).is_err());
        let cheap = Instance::new(vec![s("1"), s("1")], vec![s("0.1"), s("0.5")], s("1"), Matroid::free(2)).unwrap();
        assert!(check_strict_assumptions(&cheap, &BidGrid::new(s("1/100"), cheap.budget()).unwrap()).is_err());
    }

    #[test]
    fn generated_instances_meet_the_regime() {
        let spec = StrictSpec {
            n: 3,
            q: 30,
            family: FamilySpec::Uniform { k: 2 },
        };
        let inst = strict_instance(&spec, 4).unwrap();
        let grid = BidGrid::new(spec.delta(), inst.budget()).unwrap();
        assert_eq!(check_strict_assumptions(&inst, &grid), Ok(()));
        assert_eq!(strict_instance(&spec, 4).unwrap(), inst);
        assert!(strict_instance(
            &StrictSpec {
                n: 3,
                q: 5,
                family: FamilySpec::Free
            },
            0
        )
        .is_err());
    }
}
