#![no_main]

use libfuzzer_sys::fuzz_target;
use swatnn_core::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = RunConfig::from_toml_str(text);
    let _ = serde_json::from_str::<RunConfig>(text);
});
