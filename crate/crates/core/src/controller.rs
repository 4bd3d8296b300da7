//! Per-agent velocity law: target approach with a braking curve, agent and
//! target repulsion, virtual-agent wall/obstacle avoidance, and a speed cap.
//!
//! Everything here is a pure function of an immutable [`WorldView`], so the
//! desired velocities of all agents in one step may be computed in any order
//! or concurrently.

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::geometry::{closest_wall_point, Arena, BoundaryContact, Obstacle, Vec2};

/// Distances below this count as coincident positions.
pub const COINCIDENT_EPS: f64 = 1e-9;

/// How the braking curve enters the wall/obstacle term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallTermVariant {
    /// `D(r_id - r_wall)`, which is always zero inside the active band.
    #[default]
    Literal,
    /// `D(r_wall - r_id)`.
    DistanceReversed,
}

/// Controller gains and distances. Speeds are in m/step, accelerations in m/step².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerParams {
    /// Base travel speed toward the assigned target.
    pub base_speed: f64,
    /// Gain on the braking-curve speed when approaching a target.
    pub approach_gain: f64,
    pub approach_accel: f64,
    pub approach_brake_gain: f64,
    /// Radius of the stopping ring around a target.
    pub entrap_radius: f64,
    /// Distance below which agents repel each other.
    pub agent_repulsion_range: f64,
    pub agent_repulsion_gain: f64,
    /// Distance below which targets repel agents.
    pub target_repulsion_range: f64,
    pub target_repulsion_gain: f64,
    pub wall_gain: f64,
    /// Safety distance to walls and obstacles.
    pub wall_range: f64,
    pub wall_accel: f64,
    pub wall_brake_gain: f64,
    pub speed_limit: f64,
    /// Speed of the virtual agents sitting on walls and obstacles.
    pub shill_speed: f64,
    #[serde(default)]
    pub wall_term_variant: WallTermVariant,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            base_speed: 1.0,
            approach_gain: 1.0,
            approach_accel: 0.1,
            approach_brake_gain: 0.2,
            entrap_radius: 20.0,
            agent_repulsion_range: 24.0,
            agent_repulsion_gain: 0.6,
            target_repulsion_range: 24.0,
            target_repulsion_gain: 0.25,
            wall_gain: 2.0,
            wall_range: 10.0,
            wall_accel: 0.1,
            wall_brake_gain: 0.2,
            speed_limit: 4.0,
            shill_speed: 4.0,
            wall_term_variant: WallTermVariant::Literal,
        }
    }
}

impl ControllerParams {
    /// Radius at which a lone agent's approach and target repulsion cancel.
    pub fn equilibrium_radius(&self) -> f64 {
        self.target_repulsion_range - self.base_speed / self.target_repulsion_gain
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("base_speed", self.base_speed),
            ("approach_accel", self.approach_accel),
            ("approach_brake_gain", self.approach_brake_gain),
            ("entrap_radius", self.entrap_radius),
            ("agent_repulsion_range", self.agent_repulsion_range),
            ("agent_repulsion_gain", self.agent_repulsion_gain),
            ("target_repulsion_range", self.target_repulsion_range),
            ("target_repulsion_gain", self.target_repulsion_gain),
            ("wall_range", self.wall_range),
            ("wall_accel", self.wall_accel),
            ("wall_brake_gain", self.wall_brake_gain),
            ("speed_limit", self.speed_limit),
            ("shill_speed", self.shill_speed),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::Scenario(format!(
                    "controller.{name} must be positive and finite, got {v}"
                )));
            }
        }
        for (name, v) in [("approach_gain", self.approach_gain), ("wall_gain", self.wall_gain)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::Scenario(format!(
                    "controller.{name} must be non-negative and finite, got {v}"
                )));
            }
        }
        if self.base_speed > self.speed_limit {
            return Err(SimError::Scenario(format!(
                "controller.base_speed ({}) must not exceed controller.speed_limit ({})",
                self.base_speed, self.speed_limit
            )));
        }
        if self.shill_speed > self.speed_limit {
            return Err(SimError::Scenario(format!(
                "controller.shill_speed ({}) must not exceed controller.speed_limit ({})",
                self.shill_speed, self.speed_limit
            )));
        }
        if self.target_repulsion_range < self.entrap_radius {
            return Err(SimError::Scenario(format!(
                "controller.target_repulsion_range ({}) must be >= controller.entrap_radius ({})",
                self.target_repulsion_range, self.entrap_radius
            )));
        }
        Ok(())
    }
}

/// A positioned entity seen by an agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Body {
    pub id: usize,
    pub pos: Vec2,
}

/// Everything one agent knows when choosing its velocity.
#[derive(Debug, Clone)]
pub struct WorldView<'a> {
    pub self_id: usize,
    pub self_pos: Vec2,
    pub self_vel: Vec2,
    pub neighbors: Vec<Body>,
    pub targets: &'a [Body],
    /// Id of the assigned target.
    pub assignment: usize,
    pub arena: &'a Arena,
    pub obstacles: &'a [Obstacle],
}

/// What to do when the agent is already inside an obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenetrationPolicy {
    /// Report [`SimError::PenetratedObstacle`].
    Fault,
    /// Push out through the nearest boundary point as if touching it.
    Escape,
}

fn check_finite(values: &[f64]) -> Result<(), SimError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SimError::InvalidArgument(format!("non-finite input in {values:?}")))
    }
}

/// Speed profile with constant deceleration far away and linear decay close in.
pub fn braking_curve(r: f64, accel: f64, gain: f64) -> Result<f64, SimError> {
    check_finite(&[r, accel, gain])?;
    if accel <= 0.0 || gain <= 0.0 {
        return Err(SimError::InvalidArgument(format!(
            "braking curve needs positive acceleration and gain, got a={accel}, p={gain}"
        )));
    }
    Ok(braking_curve_unchecked(r, accel, gain))
}

fn braking_curve_unchecked(r: f64, accel: f64, gain: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else if r * gain <= accel / gain {
        r * gain
    } else {
        (2.0 * accel * r - accel * accel / (gain * gain)).sqrt()
    }
}

/// Velocity toward the target, growing with the distance beyond the stopping ring.
pub fn approach_velocity(self_pos: Vec2, target_pos: Vec2, params: &ControllerParams) -> Vec2 {
    let offset = target_pos - self_pos;
    let dist = offset.norm();
    if dist < COINCIDENT_EPS {
        return Vec2::ZERO;
    }
    let speed = params.base_speed
        + params.approach_gain
            * braking_curve_unchecked(
                dist - params.entrap_radius,
                params.approach_accel,
                params.approach_brake_gain,
            );
    offset * (speed / dist)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Reproducible unit direction for a pair of ids.
fn id_direction(first: usize, second: usize, salt: u64) -> Vec2 {
    let h = splitmix64(splitmix64(first as u64 ^ salt).wrapping_add(second as u64));
    let frac = (h >> 11) as f64 / (1u64 << 53) as f64;
    Vec2::from_angle(frac * std::f64::consts::TAU)
}

const AGENT_PAIR_SALT: u64 = 0x6167_656e_7473;
const TARGET_PAIR_SALT: u64 = 0x7461_7267_6574;

fn linear_repulsion(away: Vec2, dist: f64, range: f64, gain: f64, fallback: Vec2) -> Vec2 {
    if dist >= range {
        return Vec2::ZERO;
    }
    let dir = if dist < COINCIDENT_EPS {
        fallback
    } else {
        away / dist
    };
    dir * (gain * (range - dist))
}

/// Repulsion on agent `self_id` from agent `other_id`. Antisymmetric in the pair,
/// including the coincident case.
pub fn agent_repulsion(
    self_id: usize,
    self_pos: Vec2,
    other_id: usize,
    other_pos: Vec2,
    params: &ControllerParams,
) -> Vec2 {
    let away = self_pos - other_pos;
    let fallback = {
        let (lo, hi) = (self_id.min(other_id), self_id.max(other_id));
        let d = id_direction(lo, hi, AGENT_PAIR_SALT);
        if self_id <= other_id {
            d
        } else {
            -d
        }
    };
    linear_repulsion(
        away,
        away.norm(),
        params.agent_repulsion_range,
        params.agent_repulsion_gain,
        fallback,
    )
}

/// One-way repulsion of an agent away from a target.
pub fn target_repulsion(
    self_id: usize,
    self_pos: Vec2,
    target_id: usize,
    target_pos: Vec2,
    params: &ControllerParams,
) -> Vec2 {
    let away = self_pos - target_pos;
    linear_repulsion(
        away,
        away.norm(),
        params.target_repulsion_range,
        params.target_repulsion_gain,
        id_direction(self_id, target_id, TARGET_PAIR_SALT),
    )
}

/// Velocity-matching term against the virtual agent at `contact`.
pub fn boundary_term(
    self_vel: Vec2,
    contact: BoundaryContact,
    self_pos: Vec2,
    params: &ControllerParams,
) -> Result<Vec2, SimError> {
    check_finite(&[
        self_vel.x,
        self_vel.y,
        self_pos.x,
        self_pos.y,
        contact.point.x,
        contact.point.y,
        contact.normal.x,
        contact.normal.y,
    ])?;
    Ok(boundary_term_at(
        self_vel,
        contact.normal,
        self_pos.distance(contact.point),
        params,
    ))
}

fn boundary_term_at(self_vel: Vec2, normal: Vec2, dist: f64, params: &ControllerParams) -> Vec2 {
    if dist >= params.wall_range {
        return Vec2::ZERO;
    }
    let shill_vel = normal * params.shill_speed;
    let diff = shill_vel - self_vel;
    let rel_speed = diff.norm();
    if rel_speed < COINCIDENT_EPS {
        return Vec2::ZERO;
    }
    let brake_arg = match params.wall_term_variant {
        WallTermVariant::Literal => dist - params.wall_range,
        WallTermVariant::DistanceReversed => params.wall_range - dist,
    };
    let brake = braking_curve_unchecked(brake_arg, params.wall_accel, params.wall_brake_gain);
    let magnitude = params.wall_gain * (rel_speed - brake).max(0.0);
    diff * (magnitude / rel_speed)
}

/// Rescales `v` to at most `limit` without changing its direction.
pub fn limit_speed(v: Vec2, limit: f64) -> Vec2 {
    let n = v.norm();
    if n <= limit {
        return v;
    }
    let mut out = v * (limit / n);
    while out.norm() > limit {
        out = out * (1.0 - f64::EPSILON);
    }
    out
}

/// Desired velocity of one agent, capped at the speed limit.
pub fn desired_velocity(view: &WorldView<'_>, params: &ControllerParams) -> Result<Vec2, SimError> {
    desired_velocity_with(view, params, PenetrationPolicy::Fault)
}

pub fn desired_velocity_with(
    view: &WorldView<'_>,
    params: &ControllerParams,
    policy: PenetrationPolicy,
) -> Result<Vec2, SimError> {
    check_finite(&[view.self_pos.x, view.self_pos.y, view.self_vel.x, view.self_vel.y])?;
    let mut v = Vec2::ZERO;

    for n in &view.neighbors {
        v += agent_repulsion(view.self_id, view.self_pos, n.id, n.pos, params);
    }
    let mut assigned = None;
    for t in view.targets {
        v += target_repulsion(view.self_id, view.self_pos, t.id, t.pos, params);
        if t.id == view.assignment {
            assigned = Some(t.pos);
        }
    }
    let assigned = assigned.ok_or(SimError::UnknownTarget(view.assignment))?;
    v += approach_velocity(view.self_pos, assigned, params);

    let wall = closest_wall_point(view.arena, view.self_pos)?;
    v += boundary_term_at(
        view.self_vel,
        wall.normal,
        view.self_pos.distance(wall.point),
        params,
    );
    for obstacle in view.obstacles {
        let probe = obstacle.probe(view.self_pos);
        let dist = if probe.inside {
            match policy {
                PenetrationPolicy::Fault => {
                    return Err(SimError::PenetratedObstacle {
                        x: view.self_pos.x,
                        y: view.self_pos.y,
                    })
                }
                PenetrationPolicy::Escape => 0.0,
            }
        } else {
            probe.distance
        };
        v += boundary_term_at(view.self_vel, probe.contact.normal, dist, params);
    }

    Ok(limit_speed(v, params.speed_limit))
}
