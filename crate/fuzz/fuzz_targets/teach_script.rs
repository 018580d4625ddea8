#![no_main]

use cobot_core::knowledge::KnowledgeStore;
use cobot_core::scenarios::TeachScript;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(script) = TeachScript::parse(text) {
        TeachScript::parse(&script.to_json()).expect("printed scripts parse");
        let _ = script.apply(&mut KnowledgeStore::new());
    }
});
