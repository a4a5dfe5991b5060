#![no_main]

use libfuzzer_sys::fuzz_target;
use swatnn_core::latentopt::PenaltyConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<PenaltyConfig>(data) {
        let _ = cfg.validate();
    }
});
