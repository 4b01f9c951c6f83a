//! Price transforms that walk an ε-equilibrium toward a worse one by pushing rejected
//! modules down to (nearly) their cost.

use crate::model::{Instance, PriceVector};
use crate::scalar::Scalar;
use crate::selection::{greedy_bpb, Rule, TieBreak};

use super::{check_len, verify_eps_equilibrium, DevGrid, EquilibriumError};

/// For a rejected module `i` on a free matroid: drop `i` to `c(i) + ε`, then re-price every
/// module this pushes out of the selection at
/// `max{c(j), (c(i) + ε)·v(j)/v(i) − ε/2}`, just ahead of `i` in bang-per-buck.
///
/// Prices already at most `c(i) + ε` come back unchanged.
pub fn canonicalize_worst_additive(
    inst: &Instance,
    p: &PriceVector,
    eps: &Scalar,
    i: usize,
    tb: &TieBreak,
) -> Result<PriceVector, EquilibriumError> {
    if !inst.matroid().is_free() {
        return Err(EquilibriumError::NotFree(inst.matroid().family_name()));
    }
    check_len(p, inst.n())?;
    inst.check_module(i)?;
    let before = greedy_bpb(inst, p, tb);
    if before.contains(i) {
        return Err(EquilibriumError::Selected(i));
    }
    let floor = inst.cost(i) + eps;
    if *p.get(i) <= floor {
        return Ok(p.clone());
    }
    if !inst.value(i).is_positive() {
        return Err(EquilibriumError::ZeroValue(i));
    }
    let lowered = p.with(i, floor.clone());
    let after = greedy_bpb(inst, &lowered, tb);
    let half_eps = eps / Scalar::from_int(2);
    let mut out = lowered;
    for &j in before.selected.iter().filter(|&&j| !after.contains(j)) {
        let shadow = &floor * inst.value(j) / inst.value(i) - &half_eps;
        out.0[j] = Scalar::max_of(inst.cost(j), &shadow);
    }
    Ok(out)
}

/// Lowers every rejected module that the bang-per-buck greedy inspects before it stops to
/// `min{p(i), c(i) + ε}`. The selected value must survive and the result must still be an
/// ε-equilibrium; otherwise the input was not one (or sat on an ambiguous tie).
pub fn lower_rejected_prefix_to_cost(
    inst: &Instance,
    p: &PriceVector,
    eps: &Scalar,
    tb: &TieBreak,
) -> Result<PriceVector, EquilibriumError> {
    check_len(p, inst.n())?;
    let sel = greedy_bpb(inst, p, tb);
    let stop = sel
        .terminated_at
        .and_then(|t| sel.inspection_order.iter().position(|&x| x == t))
        .unwrap_or(inst.n());
    let mut out = p.clone();
    for &j in sel.inspection_order[..stop].iter().filter(|&&j| !sel.contains(j)) {
        let target = inst.cost(j) + eps;
        if target < out.0[j] {
            out.0[j] = target;
        }
    }
    if out == *p {
        return Ok(out);
    }
    let value_before = inst.value_of(&sel.selected);
    let value_after = inst.value_of(&greedy_bpb(inst, &out, tb).selected);
    if value_after != value_before {
        return Err(EquilibriumError::PostCondition(format!(
            "selected value moved from {value_before} to {value_after}"
        )));
    }
    let report = verify_eps_equilibrium(inst, &out, eps, Rule::Bpb, tb, &DevGrid::Exact)?;
    if !report.pass {
        return Err(EquilibriumError::PostCondition(format!(
            "modules {:?} gain more than {eps} after lowering",
            report.violators()
        )));
    }
    Ok(out)
}
