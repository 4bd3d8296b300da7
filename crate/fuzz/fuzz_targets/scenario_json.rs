#![no_main]

use libfuzzer_sys::fuzz_target;
use swarm_entrap::io::scenario::{parse_scenario_str, serialize_scenario};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(parsed) = parse_scenario_str(text) {
        // anything accepted must survive a canonical round trip
        let canonical = serialize_scenario(&parsed.scenario);
        let again = parse_scenario_str(&canonical).expect("canonical form reparses");
        assert_eq!(again.scenario, parsed.scenario);
        assert!(again.applied_defaults.is_empty());
    }
});
