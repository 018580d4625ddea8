#![no_main]

use cobot_core::arm::KinematicChain;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(chain) = KinematicChain::from_json(text) {
        let _ = chain.forward_kinematics(&chain.home());
    }
});
