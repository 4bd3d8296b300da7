//! Lévy-flight wandering for targets: constant speed, uniformly random
//! headings, Pareto-distributed segment lengths, and specular reflection off
//! walls and obstacles.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::geometry::{normalize_angle, Arena, Obstacle, Vec2};

/// Targets never come closer than this to a wall.
pub const WALL_INSET: f64 = 1e-6;
/// Pull-back along the path when stopping at a boundary.
const BOUNDARY_BACKOFF: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyParams {
    /// Tail exponent of the segment-length distribution.
    pub alpha: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for LevyParams {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            min_step: 5.0,
            max_step: 125.0,
        }
    }
}

impl LevyParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            return Err(SimError::Scenario(format!(
                "levy.alpha must lie in (1, 2], got {}",
                self.alpha
            )));
        }
        if !(self.min_step.is_finite() && self.min_step > 0.0) {
            return Err(SimError::Scenario(format!(
                "levy.min_step must be positive, got {}",
                self.min_step
            )));
        }
        if !(self.max_step.is_finite() && self.max_step > self.min_step) {
            return Err(SimError::Scenario(format!(
                "levy.max_step ({}) must exceed levy.min_step ({})",
                self.max_step, self.min_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    pub id: usize,
    pub pos: Vec2,
    /// Displacement over the last step.
    pub vel: Vec2,
    pub speed: f64,
    /// Radians in `[0, 2π)`.
    pub heading: f64,
    pub segment_remaining: f64,
}

impl TargetState {
    /// A target at rest that will draw its first segment on the next step.
    pub fn new(id: usize, pos: Vec2, speed: f64) -> Self {
        Self {
            id,
            pos,
            vel: Vec2::ZERO,
            speed,
            heading: 0.0,
            segment_remaining: 0.0,
        }
    }
}

/// Segment length before clamping, for a uniform draw `u` in `(0, 1]`.
pub fn raw_levy_length(u: f64, params: &LevyParams) -> f64 {
    params.min_step * libm::pow(u, -1.0 / params.alpha)
}

/// Clamped segment length for a uniform draw `u` in `(0, 1]`.
pub fn levy_length_from_uniform(u: f64, params: &LevyParams) -> f64 {
    raw_levy_length(u, params).clamp(params.min_step, params.max_step)
}

/// Draws one Pareto segment length clamped to `[min_step, max_step]`.
pub fn sample_levy_length<R: Rng + ?Sized>(rng: &mut R, params: &LevyParams) -> f64 {
    let u = 1.0 - rng.gen::<f64>();
    levy_length_from_uniform(u, params)
}

fn reflect(heading: f64, normal: Vec2) -> f64 {
    let d = Vec2::from_angle(heading);
    let r = d - normal * (2.0 * d.dot(normal));
    r.heading()
}

fn is_free(p: Vec2, arena: &Arena, obstacles: &[Obstacle]) -> bool {
    arena.contains(p) && !obstacles.iter().any(|o| o.contains_strictly(p))
}

fn first_wall_hit(arena: &Arena, from: Vec2, to: Vec2) -> Option<(f64, Vec2)> {
    let lo = WALL_INSET;
    let hi = arena.side - WALL_INSET;
    let d = to - from;
    let mut best: Option<(f64, Vec2)> = None;
    let mut consider = |t: f64, n: Vec2| {
        if (0.0..=1.0).contains(&t) && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, n));
        }
    };
    if to.x < lo && d.x < 0.0 {
        consider((lo - from.x) / d.x, Vec2::new(1.0, 0.0));
    }
    if to.x > hi && d.x > 0.0 {
        consider((hi - from.x) / d.x, Vec2::new(-1.0, 0.0));
    }
    if to.y < lo && d.y < 0.0 {
        consider((lo - from.y) / d.y, Vec2::new(0.0, 1.0));
    }
    if to.y > hi && d.y > 0.0 {
        consider((hi - from.y) / d.y, Vec2::new(0.0, -1.0));
    }
    best
}

/// Advances a target by one step.
pub fn target_step<R: Rng + ?Sized>(
    state: &TargetState,
    arena: &Arena,
    obstacles: &[Obstacle],
    levy: &LevyParams,
    rng: &mut R,
) -> TargetState {
    let mut next = state.clone();
    if next.segment_remaining <= 0.0 {
        next.heading = normalize_angle(rng.gen::<f64>() * TAU);
        next.segment_remaining = sample_levy_length(rng, levy);
    }

    let travel = next.speed.min(next.segment_remaining).max(0.0);
    let dir = Vec2::from_angle(next.heading);
    let from = state.pos;
    let to = from + dir * travel;

    let mut hit = first_wall_hit(arena, from, to);
    for o in obstacles {
        if let Some((t, n)) = o.first_hit(from, to) {
            if hit.is_none_or(|(bt, _)| t < bt) {
                hit = Some((t, n));
            }
        }
    }

    match hit {
        None if is_free(to, arena, obstacles) => {
            next.pos = to;
            next.segment_remaining -= travel;
        }
        None => {
            // Rounding let the path slip past a boundary test; bounce off whatever it entered.
            let normal = obstacles
                .iter()
                .find(|o| o.contains_strictly(to))
                .map(|o| o.probe(to).contact.normal)
                .unwrap_or(-dir);
            next.pos = from;
            next.heading = reflect(next.heading, normal);
            next.segment_remaining = 0.0;
        }
        Some((t, normal)) => {
            let stop = from + dir * (t * travel - BOUNDARY_BACKOFF).max(0.0);
            next.pos = if is_free(stop, arena, obstacles) { stop } else { from };
            next.heading = reflect(next.heading, normal);
            next.segment_remaining = 0.0;
        }
    }
    next.vel = next.pos - from;
    next
}
