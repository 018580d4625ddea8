#![no_main]

use cobot_core::knowledge::PredicateExpr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(expr) = PredicateExpr::parse(text) {
        let canonical = expr.to_string();
        assert_eq!(PredicateExpr::parse(&canonical).as_ref(), Ok(&expr), "{canonical}");
    }
});
