#![no_main]

use libfuzzer_sys::fuzz_target;
use swatnn_core::bench::decode_sidecar;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = decode_sidecar(text);
    }
});
