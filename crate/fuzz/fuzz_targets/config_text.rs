#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // parse must never panic; resolved configs must re-resolve cleanly
        if let Ok(partial) = extragrad::harness::parse_config_str(text) {
            let _ = partial.resolve();
        }
    }
});
