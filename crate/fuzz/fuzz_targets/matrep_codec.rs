#![no_main]

use libfuzzer_sys::fuzz_target;
use swatnn_core::matrep::{decode_matrep, decode_matrep_stream, encode_matrep};

fuzz_target!(|data: &[u8]| {
    if let Ok((header, rep)) = decode_matrep(data) {
        let bytes = encode_matrep(&rep, header.max_hidden_layers, header.num_activations);
        let (_, again) = decode_matrep(&bytes).expect("re-encoded record must decode");
        assert_eq!(again, rep);
    }
    let _ = decode_matrep_stream(data);
});
