#![no_main]

use libfuzzer_sys::fuzz_target;

// Untrusted experiment configs must never panic: parse, validate, and when
// valid, exercise the cheap derived accessors.
fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = gaudin::config::ExperimentConfig::from_json_bytes(data) {
        if let Ok(v) = cfg.validate() {
            let _ = v.points_c.len();
            let _ = v.tolerances.scaled(2.0);
        }
    }
});
