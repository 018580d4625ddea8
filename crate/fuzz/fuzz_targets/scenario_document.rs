#![no_main]

use cobot_core::assets;
use cobot_core::sim::{evaluate_task, ScenarioDoc};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = ScenarioDoc::parse(text) else { return };
    if let Ok(scenario) = doc.load(assets::default_chain().home()) {
        let report = evaluate_task(&scenario.world, &doc.task);
        assert_eq!(report.parts_moved, 0);
    }
});
