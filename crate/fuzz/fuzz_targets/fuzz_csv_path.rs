//! Fuzzes the CSV path decoder: arbitrary byte input must produce
//! `Ok(path)` or a typed error, never a panic; accepted paths must
//! round-trip through the encoder.

#![no_main]

use libfuzzer_sys::fuzz_target;

use bessel_sim::io::{read_path_csv, write_path_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(path) = read_path_csv(data) {
        let mut buf = Vec::new();
        write_path_csv(&path, &mut buf).expect("accepted path must re-encode");
        let again = read_path_csv(buf.as_slice()).expect("re-encoded path must parse");
        assert_eq!(path.values().len(), again.values().len());
    }
});
