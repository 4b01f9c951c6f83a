use std::cmp::Ordering;

use crate::model::Instance;
use crate::scalar::Scalar;
use crate::selection::bpb_cmp;

const HALVINGS: usize = 64;

/// Whether all `v(i)/c(i)` are pairwise distinct.
pub fn ratios_distinct(inst: &Instance) -> bool {
    let n = inst.n();
    (0..n).all(|a| {
        (a + 1..n).all(|b| bpb_cmp(inst.value(a), inst.cost(a), inst.value(b), inst.cost(b)) != Ordering::Equal)
    })
}

/// Deterministic value perturbation making every `v(i)/c(i)` distinct.
///
/// Module `i` (0-based) gains `(i+1)·ε'/n` for the largest `ε' = ε/2^k` that separates all
/// ratios. When that linear family can never separate some pair, `ε'^(i+1)` is added
/// instead. Returns the instance and the `ε'` used; an instance whose ratios are already
/// distinct comes back unchanged with `ε' = 0`.
///
/// Modules with zero cost all have infinite ratio, which no value perturbation can
/// separate; such ties survive.
pub fn perturb_distinct_ratios(inst: &Instance, eps: &Scalar) -> (Instance, Scalar) {
    assert!(eps.is_positive(), "perturbation size must be positive");
    if ratios_distinct(inst) {
        return (inst.clone(), Scalar::zero());
    }
    let n = Scalar::from_int(inst.n() as i64);
    let linear = |e: &Scalar| -> Instance {
        let values = inst
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| v + e * Scalar::from_int(i as i64 + 1) / &n)
            .collect();
        inst.with_values(values).expect("perturbation keeps values nonnegative")
    };
    let mut e = eps.clone();
    for _ in 0..HALVINGS {
        let candidate = linear(&e);
        if ratios_distinct(&candidate) {
            return (candidate, e);
        }
        e = e / Scalar::from_int(2);
    }
    let mut e = Scalar::min_of(eps, &Scalar::ratio(1, 2));
    for _ in 0..HALVINGS {
        let mut power = e.clone();
        let values = inst
            .values()
            .iter()
            .map(|v| {
                let out = v + &power;
                power = &power * &e;
                out
            })
            .collect();
        let candidate = inst.with_values(values).expect("perturbation keeps values nonnegative");
        if ratios_distinct(&candidate) {
            return (candidate, e);
        }
        e = e / Scalar::from_int(2);
    }
    (linear(eps), eps.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::Matroid;

    fn inst(values: &[i64], costs: &[i64]) -> Instance {
        Instance::new(
            values.iter().map(|&v| Scalar::from_int(v)).collect(),
            costs.iter().map(|&c| Scalar::from_int(c)).collect(),
            Scalar::from_int(100),
            Matroid::free(values.len()),
        )
        .unwrap()
    }

    #[test]
    fn distinct_instance_unchanged() {
        let i = inst(&[1, 2], &[1, 1]);
        let (out, e) = perturb_distinct_ratios(&i, &Scalar::ratio(1, 10));
        assert_eq!(out, i);
        assert!(e.is_zero());
    }

    #[test]
    fn equal_ratios_separated() {
        let (out, e) = perturb_distinct_ratios(&inst(&[1, 1], &[1, 1]), &Scalar::ratio(1, 10));
        assert!(ratios_distinct(&out));
        assert!(e.is_positive() && e <= Scalar::ratio(1, 10));
    }

    #[test]
    fn linear_degenerate_pair_uses_powers() {
        // (1 + e/2)/1 == (2 + 2e/2)/2 for every e
        let (out, _) = perturb_distinct_ratios(&inst(&[1, 2], &[1, 2]), &Scalar::ratio(1, 10));
        assert!(ratios_distinct(&out));
    }
}
