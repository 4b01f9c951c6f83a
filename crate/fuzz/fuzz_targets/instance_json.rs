#![no_main]

use libfuzzer_sys::fuzz_target;
use pricecomp::io::{load_instance, save_instance};
use pricecomp::selection::greedy_bpb;
use pricecomp::TieBreak;

fuzz_target!(|data: &[u8]| {
    let Ok(inst) = load_instance(data) else { return };
    let again = load_instance(&save_instance(&inst)).expect("saved instances load");
    assert_eq!(again, inst);
    // circuit queries on big graphic matroids are slow, not interesting
    if inst.n() <= 64 {
        let sel = greedy_bpb(&inst, &inst.cost_prices(), &TieBreak::ByCostRatio);
        assert!(inst.matroid().independent(&sel.selected));
        assert!(sel.spend <= *inst.budget());
    }
});
