//! Adaptive target selection.
//!
//! Every agent scores each target with a weighted linear combination of its
//! distance to the target, the number of other agents already assigned to
//! it, and any number of extra per-target factors (a priority row by
//! default). The agent pursues the lowest score, keeping its current target
//! while that target's score stays within a hysteresis band of the best.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::geometry::Vec2;

/// An additional scoring row with one value per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraFactor {
    pub name: String,
    pub weight: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionWeights {
    /// Score per meter of distance.
    pub distance: f64,
    /// Score per agent already assigned to the target.
    pub crowding: f64,
    #[serde(default)]
    pub extra: Vec<ExtraFactor>,
}

impl Default for DecisionWeights {
    fn default() -> Self {
        Self {
            distance: 1.0,
            crowding: 20.0,
            extra: Vec::new(),
        }
    }
}

impl DecisionWeights {
    pub fn validate(&self, target_count: usize) -> Result<(), SimError> {
        if !(self.distance.is_finite() && self.distance > 0.0) {
            return Err(SimError::Scenario(format!(
                "decision.distance must be positive and finite, got {}",
                self.distance
            )));
        }
        if !(self.crowding.is_finite() && self.crowding >= 0.0) {
            return Err(SimError::Scenario(format!(
                "decision.crowding must be non-negative and finite, got {}",
                self.crowding
            )));
        }
        for (i, f) in self.extra.iter().enumerate() {
            if !f.weight.is_finite() {
                return Err(SimError::Scenario(format!(
                    "decision.extra[{i}] ({}) weight must be finite",
                    f.name
                )));
            }
            if f.values.len() != target_count {
                return Err(SimError::Scenario(format!(
                    "decision.extra[{i}] ({}) has {} values but the scenario has {target_count} targets",
                    f.name,
                    f.values.len()
                )));
            }
            if f.values.iter().any(|v| !v.is_finite()) {
                return Err(SimError::Scenario(format!(
                    "decision.extra[{i}] ({}) values must be finite",
                    f.name
                )));
            }
        }
        Ok(())
    }

    /// Pure nearest-target selection with the same distance weight.
    pub fn nearest_only(&self) -> Self {
        Self {
            distance: self.distance,
            crowding: 0.0,
            extra: Vec::new(),
        }
    }
}

/// Target assigned to each agent, indexed by agent id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    targets: Vec<usize>,
    last_switch: Vec<usize>,
    target_count: usize,
}

impl Assignment {
    pub fn new(targets: Vec<usize>, target_count: usize) -> Result<Self, SimError> {
        if let Some(&bad) = targets.iter().find(|&&t| t >= target_count) {
            return Err(SimError::UnknownTarget(bad));
        }
        let last_switch = vec![0; targets.len()];
        Ok(Self {
            targets,
            last_switch,
            target_count,
        })
    }

    pub fn target_of(&self, agent: usize) -> usize {
        self.targets[agent]
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Step at which each agent last changed target.
    pub fn last_switch(&self) -> &[usize] {
        &self.last_switch
    }

    pub fn target_count(&self) -> usize {
        self.target_count
    }

    pub fn agent_count(&self) -> usize {
        self.targets.len()
    }

    /// Agents assigned to each target.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.target_count];
        for &t in &self.targets {
            counts[t] += 1;
        }
        counts
    }
}

/// Number of agents other than `self_id` assigned to `target_id`.
pub fn count_surrounding(
    target_id: usize,
    assignment: &Assignment,
    self_id: usize,
) -> Result<usize, SimError> {
    if target_id >= assignment.target_count {
        return Err(SimError::UnknownTarget(target_id));
    }
    Ok(assignment
        .targets
        .iter()
        .enumerate()
        .filter(|&(agent, &t)| agent != self_id && t == target_id)
        .count())
}

/// Weighted score of every target; lower is preferred.
pub fn seq_row(
    distances: &[f64],
    counts: &[f64],
    extras: &[&[f64]],
    weights: &DecisionWeights,
) -> Result<Vec<f64>, SimError> {
    let n = distances.len();
    if n == 0 {
        return Err(SimError::RowLength {
            row: "distances".into(),
            expected: 1,
            got: 0,
        });
    }
    if counts.len() != n {
        return Err(SimError::RowLength {
            row: "counts".into(),
            expected: n,
            got: counts.len(),
        });
    }
    if extras.len() != weights.extra.len() {
        return Err(SimError::RowLength {
            row: "extra factor weights".into(),
            expected: weights.extra.len(),
            got: extras.len(),
        });
    }
    for (row, factor) in extras.iter().zip(&weights.extra) {
        if row.len() != n {
            return Err(SimError::RowLength {
                row: factor.name.clone(),
                expected: n,
                got: row.len(),
            });
        }
    }
    Ok((0..n)
        .map(|k| {
            let mut s = weights.distance * distances[k] + weights.crowding * counts[k];
            for (row, factor) in extras.iter().zip(&weights.extra) {
                s += factor.weight * row[k];
            }
            s
        })
        .collect())
}

/// Picks the lowest score; the current target is kept while its score is
/// within `hysteresis` of the minimum. Exact ties go to the lowest index.
pub fn choose_target(current: Option<usize>, seq: &[f64], hysteresis: f64) -> usize {
    assert!(!seq.is_empty(), "choose_target needs at least one target");
    let mut best = 0;
    for (k, &s) in seq.iter().enumerate().skip(1) {
        if s < seq[best] {
            best = k;
        }
    }
    match current {
        Some(c) if c < seq.len() && seq[c] <= seq[best] + hysteresis => c,
        _ => best,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionConfig {
    pub weights: DecisionWeights,
    /// Score margin required before switching away from the current target.
    pub hysteresis: f64,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        Self {
            weights: DecisionWeights::default(),
            hysteresis: 5.0,
        }
    }
}

impl DecisionConfig {
    pub fn validate(&self, target_count: usize) -> Result<(), SimError> {
        self.weights.validate(target_count)?;
        if !(self.hysteresis.is_finite() && self.hysteresis >= 0.0) {
            return Err(SimError::Scenario(format!(
                "decision.hysteresis must be non-negative and finite, got {}",
                self.hysteresis
            )));
        }
        Ok(())
    }

    /// Nearest-target selection without hysteresis.
    pub fn baseline(&self) -> Self {
        Self {
            weights: self.weights.nearest_only(),
            hysteresis: 0.0,
        }
    }
}

/// One sequential pass over agents in a random order. Agents see the counts
/// left by agents earlier in the pass. Unset entries are assigned outright.
fn sequential_pass<R: Rng + ?Sized>(
    current: &mut [Option<usize>],
    agents: &[Vec2],
    targets: &[Vec2],
    config: &DecisionConfig,
    rng: &mut R,
) -> Vec<bool> {
    let n_targets = targets.len();
    let mut counts = vec![0usize; n_targets];
    for t in current.iter().flatten() {
        counts[*t] += 1;
    }
    let extras: Vec<&[f64]> = config.weights.extra.iter().map(|f| f.values.as_slice()).collect();

    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.shuffle(rng);

    let mut changed = vec![false; agents.len()];
    let mut distances = vec![0.0; n_targets];
    let mut others = vec![0.0; n_targets];
    for agent in order {
        let mine = current[agent];
        for k in 0..n_targets {
            distances[k] = agents[agent].distance(targets[k]);
            let own = usize::from(mine == Some(k));
            others[k] = (counts[k] - own) as f64;
        }
        let seq = seq_row(&distances, &others, &extras, &config.weights)
            .expect("rows are sized from the target list");
        let choice = choose_target(mine, &seq, config.hysteresis);
        if mine != Some(choice) {
            if let Some(old) = mine {
                counts[old] -= 1;
            }
            counts[choice] += 1;
            current[agent] = Some(choice);
            changed[agent] = true;
        }
    }
    changed
}

/// First assignment for a fresh swarm: every agent starts unassigned and takes
/// the minimum of its score row, in a random sequential order.
pub fn initial_assignment<R: Rng + ?Sized>(
    agents: &[Vec2],
    targets: &[Vec2],
    config: &DecisionConfig,
    rng: &mut R,
) -> Result<Assignment, SimError> {
    if targets.is_empty() {
        return Err(SimError::InvalidArgument("no targets to assign".into()));
    }
    let mut current = vec![None; agents.len()];
    sequential_pass(&mut current, agents, targets, config, rng);
    Assignment::new(
        current.into_iter().map(|t| t.expect("every agent assigned")).collect(),
        targets.len(),
    )
}

/// Re-evaluates every agent's target once, in a random sequential order.
/// Returns the number of agents that switched.
pub fn update_assignments<R: Rng + ?Sized>(
    agents: &[Vec2],
    targets: &[Vec2],
    assignment: &mut Assignment,
    config: &DecisionConfig,
    step: usize,
    rng: &mut R,
) -> Result<usize, SimError> {
    if agents.len() != assignment.agent_count() {
        return Err(SimError::InvalidArgument(format!(
            "assignment covers {} agents but the snapshot has {}",
            assignment.agent_count(),
            agents.len()
        )));
    }
    if targets.len() != assignment.target_count {
        return Err(SimError::InvalidArgument(format!(
            "assignment covers {} targets but the snapshot has {}",
            assignment.target_count,
            targets.len()
        )));
    }
    let mut current: Vec<Option<usize>> = assignment.targets.iter().map(|&t| Some(t)).collect();
    let changed = sequential_pass(&mut current, agents, targets, config, rng);
    let mut switches = 0;
    for (agent, flag) in changed.into_iter().enumerate() {
        if flag {
            assignment.targets[agent] = current[agent].expect("assigned");
            assignment.last_switch[agent] = step;
            switches += 1;
        }
    }
    Ok(switches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn weights(a: f64, b: f64) -> DecisionWeights {
        DecisionWeights {
            distance: a,
            crowding: b,
            extra: Vec::new(),
        }
    }

    #[test]
    fn count_surrounding_examples() {
        let mut targets = vec![0; 6];
        targets.extend(vec![1; 6]);
        let a = Assignment::new(targets, 3).unwrap();
        assert_eq!(count_surrounding(0, &a, 0).unwrap(), 5);
        assert_eq!(count_surrounding(1, &a, 0).unwrap(), 6);
        assert_eq!(count_surrounding(2, &a, 0).unwrap(), 0);
        assert!(matches!(count_surrounding(3, &a, 0), Err(SimError::UnknownTarget(3))));

        let lone = Assignment::new(vec![1], 2).unwrap();
        assert_eq!(count_surrounding(0, &lone, 0).unwrap(), 0);
        assert_eq!(count_surrounding(1, &lone, 0).unwrap(), 0);
    }

    #[test]
    fn seq_row_examples() {
        let w = weights(1.0, 20.0);
        let seq = seq_row(&[50.0, 120.0], &[5.0, 1.0], &[], &w).unwrap();
        assert_eq!(seq, vec![150.0, 140.0]);

        let seq = seq_row(&[50.0, 120.0], &[5.0, 1.0], &[], &weights(2.0, 0.0)).unwrap();
        assert_eq!(seq, vec![100.0, 240.0]);

        let w = DecisionWeights {
            extra: vec![ExtraFactor {
                name: "priority".into(),
                weight: -30.0,
                values: vec![1.0, 0.0],
            }],
            ..weights(1.0, 20.0)
        };
        let prio = [1.0, 0.0];
        let seq = seq_row(&[50.0, 120.0], &[5.0, 1.0], &[&prio], &w).unwrap();
        assert_eq!(seq, vec![120.0, 140.0]);
    }

    #[test]
    fn seq_row_rejects_ragged_rows() {
        let w = weights(1.0, 20.0);
        assert!(matches!(
            seq_row(&[1.0, 2.0], &[1.0], &[], &w),
            Err(SimError::RowLength { .. })
        ));
        assert!(seq_row(&[], &[], &[], &w).is_err());
    }

    #[test]
    fn choose_target_examples() {
        assert_eq!(choose_target(Some(0), &[150.0, 140.0], 0.0), 1);
        assert_eq!(choose_target(None, &[80.0, 80.0], 0.0), 0);
        assert_eq!(choose_target(Some(0), &[141.0, 140.0], 5.0), 0);
        assert_eq!(choose_target(Some(1), &[80.0, 80.0], 0.0), 1);
        assert_eq!(choose_target(Some(2), &[10.0, 10.0, 30.0], 5.0), 0);
    }

    #[test]
    fn nearest_targets_win_without_crowding_conflict() {
        let agents = [Vec2::new(0.0, 0.0), Vec2::new(100.0, 0.0)];
        let targets = [Vec2::new(5.0, 0.0), Vec2::new(95.0, 0.0)];
        let config = DecisionConfig {
            weights: weights(1.0, 20.0),
            hysteresis: 0.0,
        };
        for seed in 0..8 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = initial_assignment(&agents, &targets, &config, &mut rng).unwrap();
            assert_eq!(a.targets(), &[0, 1]);
        }
    }

    #[test]
    fn lone_target_takes_everyone() {
        let agents: Vec<Vec2> = (0..5).map(|i| Vec2::from_angle(i as f64) * 10.0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = initial_assignment(&agents, &[Vec2::ZERO], &DecisionConfig::default(), &mut rng)
            .unwrap();
        assert_eq!(a.counts(), vec![5]);
    }

    #[test]
    fn coincident_targets_split_evenly() {
        let agents: Vec<Vec2> = (0..12)
            .map(|i| Vec2::from_angle(i as f64 * 0.5) * 40.0 + Vec2::new(100.0, 100.0))
            .collect();
        let target = Vec2::new(100.0, 100.0);
        let config = DecisionConfig {
            weights: weights(1.0, 20.0),
            hysteresis: 0.0,
        };
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a = initial_assignment(&agents, &[target, target], &config, &mut rng).unwrap();
            for step in 1..10 {
                update_assignments(&agents, &[target, target], &mut a, &config, step, &mut rng)
                    .unwrap();
            }
            let c = a.counts();
            assert!(c[0].abs_diff(c[1]) <= 1, "seed {seed}: {c:?}");
        }
    }

    #[test]
    fn update_records_switch_step() {
        let agents = [Vec2::new(0.0, 0.0)];
        let targets = [Vec2::new(50.0, 0.0), Vec2::new(10.0, 0.0)];
        let mut a = Assignment::new(vec![0], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let config = DecisionConfig::default();
        let switched = update_assignments(&agents, &targets, &mut a, &config, 7, &mut rng).unwrap();
        assert_eq!(switched, 1);
        assert_eq!(a.target_of(0), 1);
        assert_eq!(a.last_switch(), &[7]);
    }

    #[test]
    fn baseline_is_pure_nearest() {
        let config = DecisionConfig {
            weights: DecisionWeights {
                extra: vec![ExtraFactor {
                    name: "priority".into(),
                    weight: 3.0,
                    values: vec![1.0],
                }],
                ..weights(1.0, 20.0)
            },
            hysteresis: 5.0,
        };
        let b = config.baseline();
        assert_eq!(b.hysteresis, 0.0);
        assert_eq!(b.weights.crowding, 0.0);
        assert!(b.weights.extra.is_empty());
    }
}
