#![no_main]

use libfuzzer_sys::fuzz_target;
use swarm_entrap::io::record::{metrics_to_json, parse_metrics};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = parse_metrics(text) {
        let json = metrics_to_json(&report);
        let again = parse_metrics(&json).expect("written report reparses");
        assert_eq!(metrics_to_json(&again), json);
    }
});
