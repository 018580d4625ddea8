#![no_main]

use cobot_core::arm::PlanningProblem;
use cobot_core::assets;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(problem) = PlanningProblem::parse(text) {
        if problem.check(&assets::default_chain()).is_ok() {
            let _ = problem.scene();
        }
    }
});
