#![no_main]

use libfuzzer_sys::fuzz_target;
use pricecomp::io::{load_prices, save_prices};

fuzz_target!(|data: &[u8]| {
    let Some((&n, doc)) = data.split_first() else { return };
    let n = usize::from(n % 16);
    let Ok(prices) = load_prices(doc, n) else { return };
    assert_eq!(prices.len(), n);
    assert_eq!(
        load_prices(&save_prices(&prices), n).expect("saved prices load"),
        prices
    );
});
