#![no_main]

use libfuzzer_sys::fuzz_target;
use pricecomp::Scalar;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(x) = text.parse::<Scalar>() else { return };
    assert_eq!(x.to_string().parse::<Scalar>().expect("printed scalars parse"), x);
});
