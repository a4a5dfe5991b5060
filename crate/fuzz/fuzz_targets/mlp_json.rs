#![no_main]

use libfuzzer_sys::fuzz_target;
use swatnn_core::netcore::{mlp_from_json, mlp_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mlp) = mlp_from_json(text) {
        let again = mlp_from_json(&mlp_to_json(&mlp)).expect("re-encoded network must parse");
        assert_eq!(again, mlp);
    }
});
