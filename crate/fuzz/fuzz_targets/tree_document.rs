#![no_main]

use cobot_core::bt::document::{parse_tree, to_document};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(tree) = parse_tree(text) {
        let again = parse_tree(&to_document(&tree)).expect("printed trees parse");
        assert!(tree.same_structure(&again));
    }
});
