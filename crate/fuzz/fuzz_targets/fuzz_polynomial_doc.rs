#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(p) = gaudin::mpoly::MPoly::from_json_str(s) {
            // re-encode and reparse: accepted documents round-trip
            let doc = p.to_json();
            let s2 = serde_json::to_string(&doc).unwrap();
            let p2 = gaudin::mpoly::MPoly::from_json_str(&s2).expect("round trip");
            assert_eq!(p, p2);
        }
    }
});
