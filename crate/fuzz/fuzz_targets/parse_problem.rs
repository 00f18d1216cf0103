#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = deso::io::parse_problem(text) {
            // Accepted problems must survive a round trip.
            let again = deso::io::serialize_problem(&p);
            deso::io::parse_problem(&again).expect("serialized problem parses");
        }
    }
});
