#![no_main]

use libfuzzer_sys::fuzz_target;
use swatnn_core::bench::decode_dataset;

fuzz_target!(|data: &[u8]| {
    let _ = decode_dataset(data);
});
