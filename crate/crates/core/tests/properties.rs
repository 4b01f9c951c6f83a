//! Property tests over random instances and prices.

use proptest::prelude::*;

use pricecomp::equilibrium::{construct_eq_weighted, verify_eps_equilibrium, DevGrid};
use pricecomp::experiments::matroid_axiom_violation;
use pricecomp::generate::{generate_instance, FamilySpec, GenSpec};
use pricecomp::io::{load_instance, save_instance};
use pricecomp::learning::{run_dynamics, DynamicsConfig, LearnerState};
use pricecomp::selection::{bpb_order, greedy_bpb, greedy_skip};
use pricecomp::{Instance, PriceVector, Rule, Scalar, TieBreak};

const FAMILIES: [FamilySpec; 4] = [
    FamilySpec::Free,
    FamilySpec::Uniform { k: 3 },
    FamilySpec::Partition { blocks: 3, cap: 2 },
    FamilySpec::Graphic { vertices: 4 },
];

fn instance(n: usize, family: usize, unit: bool, seed: u64) -> Instance {
    let mut spec = GenSpec::new(n, Scalar::ratio(1, 2), FAMILIES[family % FAMILIES.len()]);
    spec.unit_values = unit;
    generate_instance(&spec, seed).unwrap()
}

/// `fractions[i]/1000` of the way from `c(i)` to `B`.
fn prices(inst: &Instance, fractions: &[u16]) -> PriceVector {
    PriceVector(
        (0..inst.n())
            .map(|i| {
                let c = inst.cost(i);
                c + (inst.budget() - c) * Scalar::ratio(i64::from(fractions[i % fractions.len()] % 1001), 1000)
            })
            .collect(),
    )
}

fn fractions() -> impl Strategy<Value = Vec<u16>> {
    prop::collection::vec(0u16..=1000, 10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn greedy_selection_is_independent_and_affordable(n in 1usize..11, family in 0usize..4, seed in any::<u64>(), f in fractions()) {
        let inst = instance(n, family, false, seed);
        let p = prices(&inst, &f);
        let sel = greedy_bpb(&inst, &p, &TieBreak::ByCostRatio);
        prop_assert!(inst.matroid().independent(&sel.selected));
        prop_assert!(sel.spend <= *inst.budget());
        prop_assert_eq!(&sel.spend, &p.sum_over(&sel.selected));
    }

    #[test]
    fn greedy_set_is_max_weight_on_inspected_prefix(n in 1usize..11, family in 0usize..4, seed in any::<u64>(), f in fractions()) {
        // generated values are distinct, so the max-weight set is unique
        let inst = instance(n, family, false, seed);
        let p = prices(&inst, &f);
        let sel = greedy_bpb(&inst, &p, &TieBreak::ByCostRatio);
        let stop = sel.terminated_at.map_or(n, |t| sel.inspection_order.iter().position(|&x| x == t).unwrap());
        let mut best = inst.matroid().max_weight_independent(inst.values(), &sel.inspection_order[..stop]);
        best.sort_unstable();
        prop_assert_eq!(sel.selected, best);
    }

    #[test]
    fn unit_values_swap_greedy_matches_skip_greedy(n in 1usize..11, family in 0usize..4, seed in any::<u64>(), f in fractions()) {
        // with ties ranked in inspection order the newcomer is always the one evicted
        let inst = instance(n, family, true, seed);
        let p = prices(&inst, &f);
        let order = bpb_order(&inst, &p, &TieBreak::ByIndex);
        let tb = TieBreak::explicit(order, n).unwrap();
        let swap = greedy_bpb(&inst, &p, &tb);
        let skip = greedy_skip(&inst, &p, &tb);
        prop_assert_eq!(swap.selected, skip.selected);
        prop_assert_eq!(swap.terminated_at, skip.terminated_at);
    }

    #[test]
    fn raising_one_price_keeps_the_others_in_order(n in 2usize..11, seed in any::<u64>(), f in fractions(), who in any::<prop::sample::Index>(), lift in 0u16..=1000) {
        let inst = instance(n, 0, false, seed);
        let p = prices(&inst, &f);
        let i = who.index(n);
        let raised = p.with(i, p.get(i) + (inst.budget() - p.get(i)) * Scalar::ratio(i64::from(lift), 1000));
        let tb = TieBreak::ByCostRatio;
        let without = |o: Vec<usize>| o.into_iter().filter(|&j| j != i).collect::<Vec<_>>();
        prop_assert_eq!(without(bpb_order(&inst, &p, &tb)), without(bpb_order(&inst, &raised, &tb)));
    }

    #[test]
    fn instance_documents_round_trip(n in 1usize..11, family in 0usize..4, seed in any::<u64>()) {
        let inst = instance(n, family, false, seed);
        prop_assert_eq!(load_instance(&save_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn generator_respects_cost_bounds(n in 1usize..20, seed in any::<u64>(), lambda_thousandths in 1i64..=1000, floor_percent in 0i64..=100) {
        let lambda = Scalar::ratio(lambda_thousandths, 1000);
        let mut spec = GenSpec::new(n, lambda.clone(), FamilySpec::Free);
        spec.budget = Scalar::ratio(7, 2);
        spec.min_cost = &lambda * &spec.budget * Scalar::ratio(floor_percent, 100);
        let inst = generate_instance(&spec, seed).unwrap();
        for c in inst.costs() {
            prop_assert!(*c >= spec.min_cost && *c <= &lambda * &spec.budget);
        }
        prop_assert!(inst.lambda_max() <= lambda);
    }

    #[test]
    fn weighted_construction_is_self_consistent(n in 1usize..9, family in 0usize..4, seed in any::<u64>()) {
        let inst = instance(n, family, false, seed);
        let tb = TieBreak::ByCostRatio;
        let eq = construct_eq_weighted(&inst, &tb).unwrap();
        for i in 0..n {
            prop_assert!(eq.prices.get(i) >= inst.cost(i));
        }
        for &i in &eq.selected {
            prop_assert!(eq.prices.get(i) <= inst.budget());
        }
        prop_assert_eq!(&greedy_bpb(&inst, &eq.prices, &tb).selected, &eq.selected);
    }

    #[test]
    fn verifier_passes_exactly_when_no_gain_exceeds_eps(n in 1usize..6, family in 0usize..4, seed in any::<u64>(), f in fractions(), eps_thousandths in 0i64..50) {
        let inst = instance(n, family, false, seed);
        let p = prices(&inst, &f);
        let eps = Scalar::ratio(eps_thousandths, 1000);
        let report = verify_eps_equilibrium(&inst, &p, &eps, Rule::Bpb, &TieBreak::ByCostRatio, &DevGrid::Exact).unwrap();
        prop_assert_eq!(report.pass, report.max_gain() <= eps);
        prop_assert_eq!(report.pass, report.violators().is_empty());
    }

    #[test]
    fn generated_matroids_satisfy_the_axioms(n in 1usize..9, family in 0usize..4, seed in any::<u64>()) {
        let inst = instance(n, family, false, seed);
        prop_assert_eq!(matroid_axiom_violation(inst.matroid()), None);
    }

    #[test]
    fn hedge_distribution_is_proper_and_sigma_monotone(bids in 1usize..30, rounds in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 30), 1..20), c0 in 0.0f64..8.0) {
        let mut learner = LearnerState::new(0, bids, c0, false);
        let mut previous = learner.cumulative().to_vec();
        for rewards in &rounds {
            learner.update(&rewards[..bids]);
            for (now, before) in learner.cumulative().iter().zip(&previous) {
                prop_assert!(now >= before);
            }
            previous = learner.cumulative().to_vec();
            let probs = learner.probabilities();
            prop_assert!(probs.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dynamics_trace_stays_on_the_grid(n in 1usize..4, family in 0usize..4, seed in any::<u64>(), rounds in 1u64..60, step in prop::sample::select(vec![2i64, 5, 10, 20])) {
        let inst = instance(n, family, false, seed);
        let delta = Scalar::ratio(1, step);
        let trace = run_dynamics(&inst, &DynamicsConfig::new(delta, rounds, seed)).unwrap();
        prop_assert_eq!(trace.rounds() as u64, rounds);
        for t in 0..trace.rounds() {
            for i in 0..n {
                prop_assert!(trace.grid().index_of(trace.price(t, i)).is_some());
            }
            let selected = trace.selected_set(t);
            prop_assert!(inst.matroid().independent(&selected));
            prop_assert!(trace.prices(t).sum_over(&selected) <= *inst.budget());
        }
    }
}

#[test]
fn explicit_tie_break_must_be_a_bijection() {
    assert!(TieBreak::explicit(vec![1, 0, 2], 3).is_ok());
    assert!(TieBreak::explicit(vec![1, 1, 2], 3).is_err());
    assert!(TieBreak::explicit(vec![0, 1], 3).is_err());
    assert!(TieBreak::explicit(vec![0, 1, 3], 3).is_err());
}
