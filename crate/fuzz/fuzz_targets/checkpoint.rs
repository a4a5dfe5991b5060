#![no_main]

use libfuzzer_sys::fuzz_target;
use swatnn_core::autoenc::{decode_checkpoint, encode_checkpoint};

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = decode_checkpoint(data) {
        let bytes = encode_checkpoint(&model);
        let again = decode_checkpoint(&bytes).expect("re-encoded checkpoint must decode");
        assert_eq!(encode_checkpoint(&again), bytes);
    }
});
