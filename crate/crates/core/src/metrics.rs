//! Entrapment indicators computed offline from a finished [`Trajectory`].
//!
//! Sectors are fixed to world axes: sector 0 starts at +x and sectors run
//! counterclockwise. "Never" results are `None` and serialize as `null`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::geometry::{Obstacle, Vec2};
use crate::simulator::{Frame, MetricsConfig, Trajectory};

/// Velocities shorter than this count as stationary.
pub const STATIONARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub agent_count: usize,
    pub target_count: usize,
    pub steps: usize,
    pub sector_radius: f64,
    pub sector_count: usize,
    /// Steps at which the per-sample series below were taken.
    pub sample_steps: Vec<usize>,
    /// Per sample, agents assigned to each target.
    pub agents_per_target: Vec<Vec<usize>>,
    /// Per sample, agents within the sector radius of each target.
    pub agents_near_target: Vec<Vec<usize>>,
    /// Per sample, per target, agents in each sector.
    pub sector_occupancy: Vec<Vec<Vec<usize>>>,
    pub entrap_time_per_target: Vec<Option<usize>>,
    /// Earliest step at which some target was fully encircled.
    pub entrap_time_first: Option<usize>,
    /// Earliest step by which every target had been fully encircled.
    pub entrap_time_all: Option<usize>,
    /// Mean path length travelled by agents up to `entrap_time_all`.
    pub avg_entrap_distance: Option<f64>,
    /// Mean over steps from `entrap_time_all` onward of the spread between the
    /// most and least assigned targets.
    pub post_entrap_count_imbalance: Option<f64>,
    /// Per sample; `None` with fewer than two agents.
    pub min_pairwise_distance: Vec<Option<f64>>,
    pub run_min_pairwise_distance: Option<f64>,
    /// Per agent, correlation of consecutive velocities at each sample step ≥ 1.
    pub velocity_correlation: Vec<Vec<f64>>,
    /// Per agent, mean correlation over every step of the run.
    pub mean_velocity_correlation: Vec<Option<f64>>,
    pub overall_velocity_correlation: Option<f64>,
    /// Agent snapshots found strictly inside an obstacle.
    pub collision_events: usize,
}

/// Sector of `agent_pos` around `target_pos` among `sectors` equal sectors.
pub fn sector_index(agent_pos: Vec2, target_pos: Vec2, sectors: usize) -> Result<usize, SimError> {
    if sectors == 0 {
        return Err(SimError::InvalidArgument("sector count must be positive".into()));
    }
    let rel = agent_pos - target_pos;
    if rel.norm() < STATIONARY_EPS {
        return Err(SimError::InvalidArgument(
            "agent coincides with target; sector undefined".into(),
        ));
    }
    let theta = rel.heading();
    let idx = (theta * sectors as f64 / TAU).floor() as usize;
    Ok(idx.min(sectors - 1))
}

/// Agents within `radius` of the target, binned by sector. An agent exactly on
/// the target counts in sector 0.
pub fn sector_occupancy(agents: &[Vec2], target_pos: Vec2, radius: f64, sectors: usize) -> Vec<usize> {
    let mut bins = vec![0; sectors.max(1)];
    for &p in agents {
        if p.distance(target_pos) <= radius {
            bins[sector_index(p, target_pos, sectors).unwrap_or(0)] += 1;
        }
    }
    bins
}

pub fn is_encircled(bins: &[usize]) -> bool {
    !bins.is_empty() && bins.iter().all(|&c| c >= 1)
}

/// Smallest distance between any two agents; `None` for fewer than two.
pub fn min_pairwise_distance(agents: &[Vec2]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..agents.len() {
        for j in i + 1..agents.len() {
            let d = agents[i].distance(agents[j]);
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        }
    }
    best
}

/// Cosine of the angle between consecutive velocities; 1 if either is stationary.
pub fn velocity_correlation(v_prev: Vec2, v_curr: Vec2) -> f64 {
    let (a, b) = (v_prev.norm(), v_curr.norm());
    if a < STATIONARY_EPS || b < STATIONARY_EPS {
        return 1.0;
    }
    (v_prev.dot(v_curr) / (a * b)).clamp(-1.0, 1.0)
}

/// Agents assigned to each target.
pub fn agents_per_target(assignments: &[usize], target_count: usize) -> Vec<usize> {
    let mut counts = vec![0; target_count];
    for &t in assignments {
        if t < target_count {
            counts[t] += 1;
        }
    }
    counts
}

fn positions(frame: &Frame) -> Vec<Vec2> {
    frame.agents.iter().map(|a| a.pos).collect()
}

/// First step at which each target is fully encircled, and the step by
/// which all of them have been.
pub fn entrapment_times(
    trajectory: &Trajectory,
    radius: f64,
    sectors: usize,
) -> (Vec<Option<usize>>, Option<usize>) {
    let n_targets = trajectory.target_count();
    let mut per_target = vec![None; n_targets];
    for frame in &trajectory.frames {
        let agents = positions(frame);
        for (k, t) in frame.targets.iter().enumerate() {
            if per_target[k].is_none() && is_encircled(&sector_occupancy(&agents, t.pos, radius, sectors)) {
                per_target[k] = Some(frame.step);
            }
        }
        if per_target.iter().all(Option::is_some) {
            break;
        }
    }
    let all = if n_targets == 0 {
        None
    } else {
        per_target.iter().copied().collect::<Option<Vec<_>>>().and_then(|v| v.into_iter().max())
    };
    (per_target, all)
}

/// Mean cumulative path length of agents from step 0 to the all-targets
/// entrapment step.
pub fn avg_entrap_distance(trajectory: &Trajectory, radius: f64, sectors: usize) -> Option<f64> {
    let (_, all) = entrapment_times(trajectory, radius, sectors);
    path_length_mean(trajectory, all?)
}

fn path_length_mean(trajectory: &Trajectory, until_step: usize) -> Option<f64> {
    let n = trajectory.agent_count();
    if n == 0 {
        return None;
    }
    let mut lengths = vec![0.0; n];
    for w in trajectory.frames.windows(2) {
        if w[1].step > until_step {
            break;
        }
        for (i, len) in lengths.iter_mut().enumerate() {
            *len += w[1].agents[i].pos.distance(w[0].agents[i].pos);
        }
    }
    Some(lengths.iter().sum::<f64>() / n as f64)
}

fn collision_events(trajectory: &Trajectory, obstacles: &[Obstacle]) -> usize {
    trajectory
        .frames
        .iter()
        .flat_map(|f| f.agents.iter())
        .filter(|a| obstacles.iter().any(|o| o.contains_strictly(a.pos)))
        .count()
}

/// Computes the full report.
pub fn compute(trajectory: &Trajectory, obstacles: &[Obstacle], config: &MetricsConfig) -> MetricsReport {
    let radius = config.sector_radius;
    let sectors = config.sector_count;
    let interval = config.sample_interval.max(1);
    let n_agents = trajectory.agent_count();
    let n_targets = trajectory.target_count();

    let mut sample_steps = Vec::new();
    let mut per_target_series = Vec::new();
    let mut near_series = Vec::new();
    let mut occupancy_series = Vec::new();
    let mut min_dist_series = Vec::new();
    let mut corr_series = vec![Vec::new(); n_agents];
    for (idx, frame) in trajectory.frames.iter().enumerate() {
        if idx % interval != 0 {
            continue;
        }
        let agents = positions(frame);
        sample_steps.push(frame.step);
        per_target_series.push(agents_per_target(&frame.assignments(), n_targets));
        let occupancy: Vec<Vec<usize>> = frame
            .targets
            .iter()
            .map(|t| sector_occupancy(&agents, t.pos, radius, sectors))
            .collect();
        near_series.push(occupancy.iter().map(|b| b.iter().sum()).collect());
        occupancy_series.push(occupancy);
        min_dist_series.push(min_pairwise_distance(&agents));
        if idx >= 1 {
            let prev = &trajectory.frames[idx - 1];
            for (i, series) in corr_series.iter_mut().enumerate() {
                series.push(velocity_correlation(prev.agents[i].vel, frame.agents[i].vel));
            }
        }
    }

    let run_min = trajectory
        .frames
        .iter()
        .filter_map(|f| min_pairwise_distance(&positions(f)))
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))));

    let mut mean_corr = Vec::with_capacity(n_agents);
    let mut total = 0.0;
    let mut total_n = 0usize;
    for i in 0..n_agents {
        let mut sum = 0.0;
        let mut n = 0usize;
        for w in trajectory.frames.windows(2) {
            sum += velocity_correlation(w[0].agents[i].vel, w[1].agents[i].vel);
            n += 1;
        }
        total += sum;
        total_n += n;
        mean_corr.push((n > 0).then(|| sum / n as f64));
    }

    let (per_target, all) = entrapment_times(trajectory, radius, sectors);
    let first = per_target.iter().flatten().copied().min();
    let avg_distance = all.and_then(|s| path_length_mean(trajectory, s));
    let imbalance = all.and_then(|s| {
        let spreads: Vec<f64> = trajectory
            .frames
            .iter()
            .filter(|f| f.step >= s)
            .map(|f| {
                let c = agents_per_target(&f.assignments(), n_targets);
                let max = c.iter().copied().max().unwrap_or(0);
                let min = c.iter().copied().min().unwrap_or(0);
                (max - min) as f64
            })
            .collect();
        (!spreads.is_empty()).then(|| spreads.iter().sum::<f64>() / spreads.len() as f64)
    });

    MetricsReport {
        agent_count: n_agents,
        target_count: n_targets,
        steps: trajectory.len().saturating_sub(1),
        sector_radius: radius,
        sector_count: sectors,
        sample_steps,
        agents_per_target: per_target_series,
        agents_near_target: near_series,
        sector_occupancy: occupancy_series,
        entrap_time_per_target: per_target,
        entrap_time_first: first,
        entrap_time_all: all,
        avg_entrap_distance: avg_distance,
        post_entrap_count_imbalance: imbalance,
        min_pairwise_distance: min_dist_series,
        run_min_pairwise_distance: run_min,
        velocity_correlation: corr_series,
        mean_velocity_correlation: mean_corr,
        overall_velocity_correlation: (total_n > 0).then(|| total / total_n as f64),
        collision_events: collision_events(trajectory, obstacles),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{AgentState, TargetSnapshot};

    fn at(angle_deg: f64, r: f64) -> Vec2 {
        Vec2::from_angle(angle_deg.to_radians()) * r
    }

    #[test]
    fn sector_index_examples() {
        let t = Vec2::new(40.0, 40.0);
        assert_eq!(sector_index(t + Vec2::new(10.0, 0.0), t, 6).unwrap(), 0);
        assert_eq!(sector_index(t + Vec2::new(0.0, 10.0), t, 6).unwrap(), 1);
        assert_eq!(sector_index(t + Vec2::new(-10.0, 0.0), t, 6).unwrap(), 3);
        assert_eq!(sector_index(t + Vec2::new(0.0, -10.0), t, 6).unwrap(), 4);
        assert_eq!(sector_index(t + Vec2::new(10.0, -1e-9), t, 6).unwrap(), 5);
        assert!(sector_index(t, t, 6).is_err());
    }

    #[test]
    fn occupancy_examples() {
        let target = Vec2::new(100.0, 100.0);
        let ring: Vec<Vec2> = (0..6).map(|k| target + at(30.0 + 60.0 * k as f64, 16.0)).collect();
        let bins = sector_occupancy(&ring, target, 32.0, 6);
        assert_eq!(bins, vec![1; 6]);
        assert!(is_encircled(&bins));

        let far: Vec<Vec2> = ring.iter().map(|&p| target + (p - target) * 3.0).collect();
        assert_eq!(sector_occupancy(&far, target, 32.0, 6), vec![0; 6]);

        let mut two = ring.clone();
        two.push(target + at(45.0, 10.0));
        two.push(target + at(200.0, 40.0));
        assert_eq!(sector_occupancy(&two, target, 32.0, 6), vec![2, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn min_distance_examples() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(3.0, 4.0), Vec2::new(10.0, 0.0)];
        assert_eq!(min_pairwise_distance(&pts), Some(5.0));
        assert_eq!(min_pairwise_distance(&[Vec2::ZERO, Vec2::ZERO]), Some(0.0));
        assert_eq!(min_pairwise_distance(&[Vec2::ZERO]), None);
    }

    #[test]
    fn velocity_correlation_examples() {
        let x = Vec2::new(1.0, 0.0);
        assert_eq!(velocity_correlation(x, x), 1.0);
        assert_eq!(velocity_correlation(x, -x), -1.0);
        assert_eq!(velocity_correlation(x, Vec2::new(0.0, 1.0)), 0.0);
        assert_eq!(velocity_correlation(Vec2::new(2.0, 0.0), Vec2::new(5.0, 0.0)), 1.0);
        assert_eq!(velocity_correlation(Vec2::ZERO, x), 1.0);
    }

    #[test]
    fn agents_per_target_examples() {
        let six_six: Vec<usize> = (0..12).map(|i| i % 2).collect();
        assert_eq!(agents_per_target(&six_six, 2), vec![6, 6]);
        assert_eq!(agents_per_target(&[0; 12], 2), vec![12, 0]);
        let mut split = vec![0; 7];
        split.extend([1; 5]);
        assert_eq!(agents_per_target(&split, 2), vec![7, 5]);
    }

    fn frame(step: usize, agents: &[Vec2], targets: &[Vec2]) -> Frame {
        Frame {
            step,
            agents: agents
                .iter()
                .enumerate()
                .map(|(id, &pos)| AgentState {
                    id,
                    pos,
                    vel: Vec2::ZERO,
                    assigned_target: 0,
                })
                .collect(),
            targets: targets
                .iter()
                .enumerate()
                .map(|(id, &pos)| TargetSnapshot { id, pos, vel: Vec2::ZERO })
                .collect(),
        }
    }

    #[test]
    fn entrapment_times_on_constructed_trajectory() {
        let t1 = Vec2::new(50.0, 50.0);
        let t2 = Vec2::new(200.0, 200.0);
        let idle: Vec<Vec2> = (0..12).map(|i| Vec2::new(120.0 + i as f64 * 2.0, 10.0)).collect();
        let ring = |c: Vec2| (0..6).map(move |k| c + at(30.0 + 60.0 * k as f64, 16.0));
        let mut frames = Vec::new();
        for step in 0..15 {
            let mut agents = idle.clone();
            if step >= 7 {
                for (slot, p) in agents.iter_mut().take(6).zip(ring(t1)) {
                    *slot = p;
                }
            }
            if step >= 11 {
                for (slot, p) in agents.iter_mut().skip(6).zip(ring(t2)) {
                    *slot = p;
                }
            }
            frames.push(frame(step, &agents, &[t1, t2]));
        }
        let traj = Trajectory { frames };
        let (per, all) = entrapment_times(&traj, 32.0, 6);
        assert_eq!(per, vec![Some(7), Some(11)]);
        assert_eq!(all, Some(11));

        // truncation after the recorded time keeps it; before it yields never
        let mut cut = traj.clone();
        cut.frames.truncate(12);
        assert_eq!(entrapment_times(&cut, 32.0, 6).1, Some(11));
        cut.frames.truncate(11);
        assert_eq!(entrapment_times(&cut, 32.0, 6).1, None);
    }

    #[test]
    fn single_agent_never_encircles() {
        let frames = (0..5).map(|s| frame(s, &[Vec2::new(10.0, 10.0)], &[Vec2::new(20.0, 10.0)])).collect();
        let traj = Trajectory { frames };
        assert_eq!(entrapment_times(&traj, 32.0, 6), (vec![None], None));
        assert_eq!(avg_entrap_distance(&traj, 32.0, 6), None);
    }

    #[test]
    fn encircled_from_the_start() {
        let target = Vec2::new(100.0, 100.0);
        let ring: Vec<Vec2> = (0..6).map(|k| target + at(30.0 + 60.0 * k as f64, 16.0)).collect();
        let traj = Trajectory {
            frames: (0..3).map(|s| frame(s, &ring, &[target])).collect(),
        };
        assert_eq!(entrapment_times(&traj, 32.0, 6), (vec![Some(0)], Some(0)));
        assert_eq!(avg_entrap_distance(&traj, 32.0, 6), Some(0.0));
    }

    #[test]
    fn path_length_counts_every_step() {
        // five ring agents parked, one agent drives 2 m/step for 10 steps into the last sector
        let target = Vec2::new(100.0, 100.0);
        let parked: Vec<Vec2> = (0..5).map(|k| target + at(30.0 + 60.0 * k as f64, 16.0)).collect();
        // it runs along a tangent just outside the radius and only enters at the last step
        let end = target + at(330.0, 31.99);
        let heading = at(60.0, 1.0);
        let start = end - heading * 20.0;
        let frames = (0..=12)
            .map(|s| {
                let mut agents = parked.clone();
                agents.push(start + heading * (2.0 * s.min(10) as f64));
                frame(s, &agents, &[target])
            })
            .collect();
        let traj = Trajectory { frames };
        assert_eq!(entrapment_times(&traj, 32.0, 6).1, Some(10));
        let mean = avg_entrap_distance(&traj, 32.0, 6).unwrap();
        assert!((mean - 20.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_speed_path_mean() {
        // agent 0 moves 1 m/step, agent 1 moves 3 m/step, for 4 steps
        let frames: Vec<Frame> = (0..=4)
            .map(|s| {
                let s_f = s as f64;
                frame(s, &[Vec2::new(s_f, 0.0), Vec2::new(0.0, 3.0 * s_f)], &[Vec2::new(50.0, 50.0)])
            })
            .collect();
        let traj = Trajectory { frames };
        assert_eq!(path_length_mean(&traj, 4), Some((4.0 + 12.0) / 2.0));
        assert_eq!(path_length_mean(&traj, 2), Some((2.0 + 6.0) / 2.0));
    }
}
