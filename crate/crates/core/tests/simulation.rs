use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use swarm_entrap::io::record::{metrics_to_json, parse_metrics};
use swarm_entrap::io::scenario::parse_scenario;
use swarm_entrap::io::trajectory_csv::{parse_trajectory_str, trajectory_to_string};
use swarm_entrap::metrics::{compute, entrapment_times, sector_occupancy};
use swarm_entrap::simulator::{
    agent_desired_velocity, desired_velocities, initial_world, run, step, AgentPlacement, Scenario, Simulation,
    Trajectory,
};

fn bundled(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    parse_scenario(path).unwrap().scenario
}

fn short(name: &str, steps: usize) -> Scenario {
    Scenario { steps, ..bundled(name) }
}

#[test]
fn comparison_scenario_shape() {
    let s = bundled("paper_comparison.json");
    assert_eq!(s.arena.side, 250.0);
    assert_eq!(s.targets.len(), 2);
    assert_eq!(s.steps, 1000);
    assert_eq!(s.target_speed, 1.8);
    assert_eq!(s.controller.speed_limit, 4.0);
    assert!(matches!(s.agents, AgentPlacement::Spawn { count: 12, .. }));
    assert!(bundled("baseline_comparison.json").baseline);
}

#[test]
fn zero_steps_keeps_only_the_initial_snapshot() {
    let t = run(&short("paper_comparison.json", 0)).unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t.agent_count(), 12);
    assert!(t.frames[0].agents.iter().all(|a| a.vel.norm() == 0.0));
}

#[test]
fn trajectory_length_is_steps_plus_one() {
    let t = run(&short("scene2.json", 240)).unwrap();
    assert_eq!(t.len(), 241);
    for (i, f) in t.frames.iter().enumerate() {
        assert_eq!(f.step, i);
        assert!(f.agents.iter().enumerate().all(|(id, a)| a.id == id));
    }
}

#[test]
fn desired_velocities_do_not_depend_on_evaluation_order() {
    let s = bundled("paper_comparison.json");
    let mut sim = Simulation::new(&s).unwrap();
    for _ in 0..150 {
        sim.advance().unwrap();
        let world = sim.world();
        let forward = desired_velocities(world, &s).unwrap();
        let mut reverse = vec![None; forward.len()];
        for i in (0..forward.len()).rev() {
            reverse[i] = Some(agent_desired_velocity(world, &s, i).unwrap());
        }
        let reverse: Vec<_> = reverse.into_iter().map(Option::unwrap).collect();
        assert_eq!(forward, reverse);
    }
}

#[test]
fn stepping_by_hand_matches_run() {
    let s = short("scene1.json", 60);
    let t = run(&s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut world = initial_world(&s, &mut rng).unwrap();
    for frame in &t.frames[1..] {
        world = step(&world, &s, &mut rng).unwrap();
        assert_eq!(world.step, frame.step);
        let positions: Vec<_> = world.agents.iter().map(|a| a.pos).collect();
        assert_eq!(positions, frame.agents.iter().map(|a| a.pos).collect::<Vec<_>>());
    }
}

#[test]
fn single_target_scene_is_entrapped_cleanly() {
    let s = bundled("scene1.json");
    let t = run(&s).unwrap();
    let m = compute(&t, &s.obstacles, &s.metrics);
    assert!(m.entrap_time_all.is_some(), "{:?}", m.entrap_time_per_target);
    assert_eq!(m.collision_events, 0);
}

#[test]
fn occupancy_bins_agree_with_a_plain_recount() {
    let s = short("paper_comparison.json", 300);
    let t = run(&s).unwrap();
    let m = compute(&t, &s.obstacles, &s.metrics);
    for (sample, &step_no) in m.sample_steps.iter().enumerate() {
        let frame = &t.frames[step_no];
        for (k, target) in frame.targets.iter().enumerate() {
            let within = frame
                .agents
                .iter()
                .filter(|a| a.pos.distance(target.pos) <= s.metrics.sector_radius)
                .count();
            assert_eq!(m.sector_occupancy[sample][k].iter().sum::<usize>(), within);
            assert_eq!(m.agents_near_target[sample][k], within);
        }
        assert_eq!(m.agents_per_target[sample].iter().sum::<usize>(), 12);
    }
}

fn truncated(t: &Trajectory, last_step: usize) -> Trajectory {
    Trajectory {
        frames: t.frames[..=last_step].to_vec(),
    }
}

#[test]
fn entrapment_time_is_stable_under_truncation() {
    let s = bundled("paper_comparison.json");
    let t = run(&s).unwrap();
    let (per, all) = entrapment_times(&t, 32.0, 6);
    let all = all.expect("default seed entraps both targets");
    assert_eq!(entrapment_times(&truncated(&t, all), 32.0, 6), (per.clone(), Some(all)));
    assert_eq!(entrapment_times(&truncated(&t, all + 17), 32.0, 6), (per, Some(all)));
    assert_eq!(entrapment_times(&truncated(&t, all - 1), 32.0, 6).1, None);
}

#[test]
fn path_length_dominates_displacement() {
    let s = bundled("paper_comparison.json");
    let t = run(&s).unwrap();
    let m = compute(&t, &s.obstacles, &s.metrics);
    let when = m.entrap_time_all.unwrap();
    let chord = t.frames[when]
        .agents
        .iter()
        .zip(&t.frames[0].agents)
        .map(|(a, b)| a.pos.distance(b.pos))
        .sum::<f64>()
        / t.agent_count() as f64;
    assert!(m.avg_entrap_distance.unwrap() >= chord);
}

#[test]
fn stored_results_reload_exactly() {
    let s = short("paper_comparison.json", 200);
    let t = run(&s).unwrap();
    let text = trajectory_to_string(&t);
    let back = parse_trajectory_str(&text).unwrap();
    assert_eq!(back, t);
    let json = metrics_to_json(&compute(&t, &s.obstacles, &s.metrics));
    assert_eq!(metrics_to_json(&compute(&back, &s.obstacles, &s.metrics)), json);
    assert_eq!(metrics_to_json(&parse_metrics(&json).unwrap()), json);
}

#[test]
fn correlation_series_are_bounded() {
    let s = short("scene2.json", 120);
    let m = compute(&run(&s).unwrap(), &s.obstacles, &s.metrics);
    assert_eq!(m.velocity_correlation.len(), 12);
    for series in &m.velocity_correlation {
        assert!(series.iter().all(|c| (-1.0..=1.0).contains(c)));
    }
}

#[test]
fn sector_occupancy_matches_geometric_construction() {
    use swarm_entrap::geometry::Vec2;
    let target = Vec2::new(100.0, 100.0);
    let agents: Vec<Vec2> = (0..6)
        .map(|i| target + Vec2::from_angle((30.0 + 60.0 * i as f64).to_radians()) * 16.0)
        .collect();
    assert_eq!(sector_occupancy(&agents, target, 32.0, 6), vec![1; 6]);
}
