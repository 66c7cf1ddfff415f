#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(q) = gaudin::rational::parse_rational(s) {
            // format/parse closes the loop on every accepted input
            let back = gaudin::rational::parse_rational(&gaudin::rational::format_rational(&q))
                .expect("formatted rational must reparse");
            assert_eq!(back, q);
        }
    }
});
