#![no_main]

use libfuzzer_sys::fuzz_target;
use swarm_entrap::io::trajectory_csv::{read_trajectory, trajectory_to_string, parse_trajectory_str};

fuzz_target!(|data: &[u8]| {
    if let Ok(trajectory) = read_trajectory(data) {
        let text = trajectory_to_string(&trajectory);
        let again = parse_trajectory_str(&text).expect("written trajectory reparses");
        assert_eq!(again, trajectory);
        assert_eq!(trajectory_to_string(&again), text);
    }
});
