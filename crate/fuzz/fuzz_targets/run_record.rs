#![no_main]

use libfuzzer_sys::fuzz_target;
use swarm_entrap::io::record::{parse_record, record_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(record) = parse_record(text) {
        let json = record_to_json(&record);
        let again = parse_record(&json).expect("written record reparses");
        assert_eq!(record_to_json(&again), json);
    }
});
