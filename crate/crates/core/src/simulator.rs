//! Discrete-time stepping engine.
//!
//! One step runs four phases in a fixed order:
//! 1. re-evaluate target assignments (sequential, consumes the rng);
//! 2. compute every agent's desired velocity from the phase-1 snapshot;
//! 3. set velocities and integrate positions, clamped into the arena;
//! 4. advance every target in id order (consumes the rng).
//!
//! A run owns a single ChaCha8 stream seeded from the scenario, so a run is
//! a pure function of its scenario.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::controller::{desired_velocity_with, Body, ControllerParams, PenetrationPolicy, WorldView};
use crate::decision::{initial_assignment, update_assignments, Assignment, DecisionConfig};
use crate::error::SimError;
use crate::geometry::{Arena, Obstacle, Vec2};
use crate::target_motion::{target_step, LevyParams, TargetState};

/// Agents are kept this far inside the walls after integration.
pub const ARENA_INSET: f64 = 1e-6;
const SPAWN_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub pos: Vec2,
    /// Velocity applied during the last step, m/step.
    pub vel: Vec2,
    pub assigned_target: usize,
}

/// How agents are placed at step 0.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentPlacement {
    Explicit(Vec<Vec2>),
    /// Uniform rejection sampling inside `[min, max]`, keeping agents out of
    /// obstacles and at least `min_separation` apart.
    Spawn {
        count: usize,
        min: Vec2,
        max: Vec2,
        min_separation: f64,
    },
}

impl AgentPlacement {
    pub fn count(&self) -> usize {
        match self {
            AgentPlacement::Explicit(p) => p.len(),
            AgentPlacement::Spawn { count, .. } => *count,
        }
    }
}

/// Sampling and sector-binning settings for the evaluation metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    pub sector_radius: f64,
    pub sector_count: usize,
    pub sample_interval: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            sector_radius: 32.0,
            sector_count: 6,
            sample_interval: 1,
        }
    }
}

/// A fully validated simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub arena: Arena,
    pub obstacles: Vec<Obstacle>,
    pub agents: AgentPlacement,
    pub targets: Vec<Vec2>,
    pub target_speed: f64,
    pub controller: ControllerParams,
    pub decision: DecisionConfig,
    /// Replace adaptive selection with pure nearest-target selection.
    pub baseline: bool,
    pub levy: LevyParams,
    pub steps: usize,
    pub seed: u64,
    pub metrics: MetricsConfig,
}

fn fault(msg: String) -> SimError {
    SimError::Scenario(msg)
}

impl Scenario {
    /// Decision settings actually used by the engine.
    pub fn effective_decision(&self) -> DecisionConfig {
        if self.baseline {
            self.decision.baseline()
        } else {
            self.decision.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        Arena::new(self.arena.side).map_err(|e| fault(format!("arena.side: {e}")))?;
        self.controller.validate()?;
        self.levy.validate()?;
        if self.targets.is_empty() {
            return Err(fault("targets: at least one target is required".into()));
        }
        self.decision.validate(self.targets.len())?;
        if !(self.target_speed.is_finite() && self.target_speed >= 0.0) {
            return Err(fault(format!(
                "targets.speed must be non-negative and finite, got {}",
                self.target_speed
            )));
        }
        if self.metrics.sector_count == 0 {
            return Err(fault("metrics.sector_count must be at least 1".into()));
        }
        if self.metrics.sample_interval == 0 {
            return Err(fault("metrics.sample_interval must be at least 1".into()));
        }
        if !(self.metrics.sector_radius.is_finite() && self.metrics.sector_radius > 0.0) {
            return Err(fault(format!(
                "metrics.sector_radius must be positive, got {}",
                self.metrics.sector_radius
            )));
        }

        for (i, o) in self.obstacles.iter().enumerate() {
            o.validate().map_err(|e| fault(format!("obstacles[{i}]: {e}")))?;
            let (lo, hi) = o.bounds();
            if !(self.arena.contains_strictly(lo) && self.arena.contains_strictly(hi)) {
                return Err(fault(format!("obstacles[{i}] is not fully inside the arena")));
            }
        }
        for i in 0..self.obstacles.len() {
            for j in i + 1..self.obstacles.len() {
                if obstacles_overlap(&self.obstacles[i], &self.obstacles[j]) {
                    return Err(fault(format!("obstacles[{i}] and obstacles[{j}] overlap")));
                }
            }
        }

        for (i, &p) in self.targets.iter().enumerate() {
            self.check_free(p, &format!("targets.positions[{i}]"))?;
        }
        match &self.agents {
            AgentPlacement::Explicit(positions) => {
                if positions.is_empty() {
                    return Err(fault("agents: at least one agent is required".into()));
                }
                for (i, &p) in positions.iter().enumerate() {
                    self.check_free(p, &format!("agents.positions[{i}]"))?;
                }
            }
            AgentPlacement::Spawn {
                count,
                min,
                max,
                min_separation,
            } => {
                if *count == 0 {
                    return Err(fault("agents.spawn.count must be at least 1".into()));
                }
                if !(min.x < max.x && min.y < max.y) {
                    return Err(fault("agents.spawn: min must be below and left of max".into()));
                }
                if !(self.arena.contains_strictly(*min) && self.arena.contains_strictly(*max)) {
                    return Err(fault("agents.spawn rectangle must lie strictly inside the arena".into()));
                }
                if !(min_separation.is_finite() && *min_separation >= 0.0) {
                    return Err(fault(format!(
                        "agents.spawn.min_separation must be non-negative, got {min_separation}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_free(&self, p: Vec2, field: &str) -> Result<(), SimError> {
        if !self.arena.contains_strictly(p) {
            return Err(fault(format!("{field} ({}, {}) is not strictly inside the arena", p.x, p.y)));
        }
        if let Some(i) = self.obstacles.iter().position(|o| o.contains_strictly(p)) {
            return Err(fault(format!("{field} ({}, {}) lies inside obstacles[{i}]", p.x, p.y)));
        }
        Ok(())
    }
}

/// Conservative overlap test for load-time validation.
fn obstacles_overlap(a: &Obstacle, b: &Obstacle) -> bool {
    match (a, b) {
        (Obstacle::Circle { center: c1, radius: r1 }, Obstacle::Circle { center: c2, radius: r2 }) => {
            c1.distance(*c2) < r1 + r2
        }
        (Obstacle::Circle { center, radius }, poly @ Obstacle::Polygon { .. })
        | (poly @ Obstacle::Polygon { .. }, Obstacle::Circle { center, radius }) => {
            let probe = poly.probe(*center);
            probe.inside || probe.distance < *radius
        }
        (Obstacle::Polygon { vertices: va }, Obstacle::Polygon { vertices: vb }) => {
            // separating axis test over both edge sets
            let separated_by = |poly: &[Vec2], other: &[Vec2]| {
                (0..poly.len()).any(|i| {
                    let a = poly[i];
                    let e = poly[(i + 1) % poly.len()] - a;
                    other.iter().all(|&p| e.cross(p - a) <= 0.0)
                })
            };
            !(separated_by(va, vb) || separated_by(vb, va))
        }
    }
}

/// Complete simulation state at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub step: usize,
    pub agents: Vec<AgentState>,
    pub targets: Vec<TargetState>,
    pub assignment: Assignment,
}

impl World {
    pub fn agent_positions(&self) -> Vec<Vec2> {
        self.agents.iter().map(|a| a.pos).collect()
    }

    pub fn target_positions(&self) -> Vec<Vec2> {
        self.targets.iter().map(|t| t.pos).collect()
    }
}

fn spawn_agents<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<Vec<Vec2>, SimError> {
    match &scenario.agents {
        AgentPlacement::Explicit(p) => Ok(p.clone()),
        AgentPlacement::Spawn {
            count,
            min,
            max,
            min_separation,
        } => {
            let mut placed: Vec<Vec2> = Vec::with_capacity(*count);
            let mut attempts = 0;
            while placed.len() < *count {
                attempts += 1;
                if attempts > SPAWN_ATTEMPTS {
                    return Err(fault(format!(
                        "could not place {count} agents in the spawn rectangle after {SPAWN_ATTEMPTS} attempts"
                    )));
                }
                let p = Vec2::new(
                    min.x + (max.x - min.x) * rng.gen::<f64>(),
                    min.y + (max.y - min.y) * rng.gen::<f64>(),
                );
                let clear = scenario.obstacles.iter().all(|o| !o.contains_strictly(p))
                    && scenario.arena.contains_strictly(p)
                    && placed.iter().all(|q| q.distance(p) >= *min_separation);
                if clear {
                    placed.push(p);
                }
            }
            Ok(placed)
        }
    }
}

/// Builds the step-0 world: places agents, places targets at rest, and takes
/// the first assignment.
pub fn initial_world<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<World, SimError> {
    let positions = spawn_agents(scenario, rng)?;
    let targets: Vec<TargetState> = scenario
        .targets
        .iter()
        .enumerate()
        .map(|(id, &p)| TargetState::new(id, p, scenario.target_speed))
        .collect();
    let target_pos: Vec<Vec2> = targets.iter().map(|t| t.pos).collect();
    let assignment = initial_assignment(&positions, &target_pos, &scenario.effective_decision(), rng)?;
    let agents = positions
        .into_iter()
        .enumerate()
        .map(|(id, pos)| AgentState {
            id,
            pos,
            vel: Vec2::ZERO,
            assigned_target: assignment.target_of(id),
        })
        .collect();
    Ok(World {
        step: 0,
        agents,
        targets,
        assignment,
    })
}

/// Desired velocity of agent `index` given a snapshot.
pub fn agent_desired_velocity(world: &World, scenario: &Scenario, index: usize) -> Result<Vec2, SimError> {
    let target_bodies: Vec<Body> = world.targets.iter().map(|t| Body { id: t.id, pos: t.pos }).collect();
    desired_for(world, scenario, index, &target_bodies)
}

fn desired_for(
    world: &World,
    scenario: &Scenario,
    index: usize,
    target_bodies: &[Body],
) -> Result<Vec2, SimError> {
    let me = &world.agents[index];
    let neighbors = world
        .agents
        .iter()
        .filter(|a| a.id != me.id)
        .map(|a| Body { id: a.id, pos: a.pos })
        .collect();
    let view = WorldView {
        self_id: me.id,
        self_pos: me.pos,
        self_vel: me.vel,
        neighbors,
        targets: target_bodies,
        assignment: world.assignment.target_of(index),
        arena: &scenario.arena,
        obstacles: &scenario.obstacles,
    };
    desired_velocity_with(&view, &scenario.controller, PenetrationPolicy::Escape)
}

/// Desired velocities of all agents from one immutable snapshot.
pub fn desired_velocities(world: &World, scenario: &Scenario) -> Result<Vec<Vec2>, SimError> {
    let target_bodies: Vec<Body> = world.targets.iter().map(|t| Body { id: t.id, pos: t.pos }).collect();
    (0..world.agents.len())
        .map(|i| desired_for(world, scenario, i, &target_bodies))
        .collect()
}

/// Advances the world by one step.
pub fn step<R: Rng + ?Sized>(world: &World, scenario: &Scenario, rng: &mut R) -> Result<World, SimError> {
    let next_step = world.step + 1;

    // phase 1
    let mut snapshot = world.clone();
    let agent_pos = world.agent_positions();
    let target_pos = world.target_positions();
    update_assignments(
        &agent_pos,
        &target_pos,
        &mut snapshot.assignment,
        &scenario.effective_decision(),
        next_step,
        rng,
    )?;
    for a in &mut snapshot.agents {
        a.assigned_target = snapshot.assignment.target_of(a.id);
    }

    // phase 2
    let velocities = desired_velocities(&snapshot, scenario)?;

    // phase 3
    let mut next = snapshot;
    next.step = next_step;
    for (agent, v) in next.agents.iter_mut().zip(velocities) {
        agent.vel = v;
        agent.pos = scenario.arena.clamp_inside(agent.pos + v, ARENA_INSET);
    }

    // phase 4
    for t in &mut next.targets {
        *t = target_step(t, &scenario.arena, &scenario.obstacles, &scenario.levy, rng);
    }
    Ok(next)
}

/// Recorded state of a target at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSnapshot {
    pub id: usize,
    pub pos: Vec2,
    pub vel: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub step: usize,
    pub agents: Vec<AgentState>,
    pub targets: Vec<TargetSnapshot>,
}

impl Frame {
    pub fn from_world(world: &World) -> Self {
        Self {
            step: world.step,
            agents: world.agents.clone(),
            targets: world
                .targets
                .iter()
                .map(|t| TargetSnapshot {
                    id: t.id,
                    pos: t.pos,
                    vel: t.vel,
                })
                .collect(),
        }
    }

    /// Assigned target per agent.
    pub fn assignments(&self) -> Vec<usize> {
        self.agents.iter().map(|a| a.assigned_target).collect()
    }
}

/// Every snapshot of a run, from step 0 through the final step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn agent_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.agents.len())
    }

    pub fn target_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.targets.len())
    }
}

/// A running simulation with its own random stream.
pub struct Simulation {
    scenario: Scenario,
    rng: ChaCha8Rng,
    world: World,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self, SimError> {
        scenario.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        let world = initial_world(scenario, &mut rng)?;
        Ok(Self {
            scenario: scenario.clone(),
            rng,
            world,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn advance(&mut self) -> Result<&World, SimError> {
        self.world = step(&self.world, &self.scenario, &mut self.rng)?;
        Ok(&self.world)
    }
}

/// Runs `scenario.steps` steps and records every snapshot.
pub fn run(scenario: &Scenario) -> Result<Trajectory, SimError> {
    let mut sim = Simulation::new(scenario)?;
    let mut frames = Vec::with_capacity(scenario.steps + 1);
    frames.push(Frame::from_world(sim.world()));
    for _ in 0..scenario.steps {
        frames.push(Frame::from_world(sim.advance()?));
    }
    Ok(Trajectory { frames })
}
