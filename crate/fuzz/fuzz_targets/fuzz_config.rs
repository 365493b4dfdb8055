//! Fuzzes the config parser: arbitrary text must produce `Ok(config)` or a
//! typed error, never a panic; lookups on an accepted config must not panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

use bessel_sim::io::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = Config::parse(text) {
        let _ = cfg.get("seed");
        let _ = cfg.get_f64("delta");
        let _ = cfg.get_u64("seed");
        let _ = cfg.get_usize("paths");
        let _ = cfg.len();
    }
});
