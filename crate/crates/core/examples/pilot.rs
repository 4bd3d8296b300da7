//! Runs a scenario over many seeds, with and without adaptive selection, and
//! prints per-seed outcomes plus aggregate rates.
//!
//! `cargo run --release -p swarm-entrap-core --example pilot -- scenarios/paper_comparison.json 100`

use swarm_entrap::io::scenario::parse_scenario;
use swarm_entrap::metrics::compute;
use swarm_entrap::simulator::{run, Scenario};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().expect("usage: pilot <scenario> [seeds]");
    let seeds: u64 = args.next().map_or(100, |s| s.parse().expect("seed count"));
    let base = parse_scenario(&path).expect("scenario").scenario;

    let (mut entrapped, mut balanced, mut smoother, mut safe, mut clean) = (0, 0, 0, 0, 0);
    let r_arep = base.controller.agent_repulsion_range;
    for seed in 0..seeds {
        let agent = Scenario { seed: base.seed + seed, ..base.clone() };
        let naive = Scenario { baseline: true, ..agent.clone() };
        let ma = compute(&run(&agent).unwrap(), &agent.obstacles, &agent.metrics);
        let mb = compute(&run(&naive).unwrap(), &naive.obstacles, &naive.metrics);
        let ok = ma.entrap_time_all.is_some();
        entrapped += usize::from(ok);
        let bal = ma.post_entrap_count_imbalance.is_some_and(|d| d <= 2.0);
        balanced += usize::from(ok && bal);
        let ca = ma.overall_velocity_correlation.unwrap_or(1.0);
        let cb = mb.overall_velocity_correlation.unwrap_or(1.0);
        smoother += usize::from(ok && ca > cb);
        let min_d = ma.run_min_pairwise_distance.unwrap_or(f64::INFINITY);
        safe += usize::from(min_d > 0.25 * r_arep);
        clean += usize::from(ma.collision_events == 0);
        println!(
            "seed {:4} all={:?} per={:?} imbalance={:.2?} corr={:.4}/{:.4} min_d={:.2} collisions={} base_all={:?}",
            agent.seed,
            ma.entrap_time_all,
            ma.entrap_time_per_target,
            ma.post_entrap_count_imbalance,
            ca,
            cb,
            min_d,
            ma.collision_events,
            mb.entrap_time_all
        );
        if !ok {
            let last = ma.sample_steps.len() - 1;
            println!("   per_target={:?} occupancy={:?}", ma.agents_per_target[last], ma.sector_occupancy[last]);
        }
    }
    println!(
        "seeds={seeds} entrapped={entrapped} balanced={balanced} smoother={smoother} safe={safe} collision_free={clean}"
    );
}
