//! Planar vectors, the square arena and obstacle boundary queries.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Norms below this are treated as zero when a direction is required.
pub const DIRECTION_EPS: f64 = 1e-12;

/// A point or displacement in the plane, in meters (or meters per step for velocities).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(libm::cos(theta), libm::sin(theta))
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` when the norm is below [`DIRECTION_EPS`].
    pub fn unit(self) -> Option<Vec2> {
        let n = self.norm();
        (n > DIRECTION_EPS).then(|| self / n)
    }

    /// Counterclockwise rotation by `theta` radians.
    pub fn rotated(self, theta: f64) -> Vec2 {
        let (s, c) = (libm::sin(theta), libm::cos(theta));
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Angle in `[0, 2π)`.
    pub fn heading(self) -> f64 {
        normalize_angle(libm::atan2(self.y, self.x))
    }
}

/// Maps any finite angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut a = theta % tau;
    if a < 0.0 {
        a += tau;
    }
    if a >= tau {
        a = 0.0;
    }
    a
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A boundary point together with the unit normal pointing away from the
/// obstacle (or wall) into free space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryContact {
    pub point: Vec2,
    pub normal: Vec2,
}

/// Wall order used for tie-breaking: left, right, bottom, top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    Left,
    Right,
    Bottom,
    Top,
}

/// Axis-aligned square arena with its lower-left corner at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arena {
    pub side: f64,
}

impl Arena {
    pub fn new(side: f64) -> Result<Self, SimError> {
        if !(side.is_finite() && side > 0.0) {
            return Err(SimError::InvalidArgument(format!(
                "arena side must be positive and finite, got {side}"
            )));
        }
        Ok(Self { side })
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.is_finite() && p.x >= 0.0 && p.y >= 0.0 && p.x <= self.side && p.y <= self.side
    }

    pub fn contains_strictly(&self, p: Vec2) -> bool {
        p.is_finite() && p.x > 0.0 && p.y > 0.0 && p.x < self.side && p.y < self.side
    }

    /// Clamps `p` into the arena, inset by `inset` from every wall.
    pub fn clamp_inside(&self, p: Vec2, inset: f64) -> Vec2 {
        Vec2::new(
            p.x.clamp(inset, self.side - inset),
            p.y.clamp(inset, self.side - inset),
        )
    }

    /// Nearest wall to `p`; ties go to the earlier wall in [`Wall`] order.
    pub fn nearest_wall(&self, p: Vec2) -> (Wall, f64) {
        let candidates = [
            (Wall::Left, p.x),
            (Wall::Right, self.side - p.x),
            (Wall::Bottom, p.y),
            (Wall::Top, self.side - p.y),
        ];
        let mut best = candidates[0];
        for c in &candidates[1..] {
            if c.1 < best.1 {
                best = *c;
            }
        }
        best
    }
}

/// Closest point on the nearest wall and the wall's inward normal.
pub fn closest_wall_point(arena: &Arena, p: Vec2) -> Result<BoundaryContact, SimError> {
    if !arena.contains(p) {
        return Err(SimError::EscapedArena { x: p.x, y: p.y });
    }
    let s = arena.side;
    let (wall, _) = arena.nearest_wall(p);
    let contact = match wall {
        Wall::Left => BoundaryContact {
            point: Vec2::new(0.0, p.y),
            normal: Vec2::new(1.0, 0.0),
        },
        Wall::Right => BoundaryContact {
            point: Vec2::new(s, p.y),
            normal: Vec2::new(-1.0, 0.0),
        },
        Wall::Bottom => BoundaryContact {
            point: Vec2::new(p.x, 0.0),
            normal: Vec2::new(0.0, 1.0),
        },
        Wall::Top => BoundaryContact {
            point: Vec2::new(p.x, s),
            normal: Vec2::new(0.0, -1.0),
        },
    };
    Ok(contact)
}

/// Static obstacle: a disc or a strictly convex, counterclockwise polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    Circle { center: Vec2, radius: f64 },
    Polygon { vertices: Vec<Vec2> },
}

/// Nearest boundary point of an obstacle, whether `p` is inside or not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryProbe {
    pub contact: BoundaryContact,
    pub distance: f64,
    pub inside: bool,
}

impl Obstacle {
    pub fn circle(center: Vec2, radius: f64) -> Result<Self, SimError> {
        let o = Obstacle::Circle { center, radius };
        o.validate()?;
        Ok(o)
    }

    pub fn polygon(vertices: Vec<Vec2>) -> Result<Self, SimError> {
        let o = Obstacle::Polygon { vertices };
        o.validate()?;
        Ok(o)
    }

    /// Checks the shape invariants (positive radius, ≥3 vertices, strictly convex CCW).
    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            Obstacle::Circle { center, radius } => {
                if !center.is_finite() || !(radius.is_finite() && *radius > 0.0) {
                    return Err(SimError::InvalidArgument(format!(
                        "circle obstacle needs a finite center and positive radius, got radius {radius}"
                    )));
                }
            }
            Obstacle::Polygon { vertices } => {
                let n = vertices.len();
                if n < 3 {
                    return Err(SimError::InvalidArgument(format!(
                        "polygon obstacle needs at least 3 vertices, got {n}"
                    )));
                }
                if vertices.iter().any(|v| !v.is_finite()) {
                    return Err(SimError::InvalidArgument(
                        "polygon obstacle has a non-finite vertex".into(),
                    ));
                }
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let c = vertices[(i + 2) % n];
                    if (b - a).cross(c - b) <= 0.0 {
                        return Err(SimError::InvalidArgument(format!(
                            "polygon obstacle must be strictly convex and counterclockwise (turn at vertex {} is not a left turn)",
                            (i + 1) % n
                        )));
                    }
                }
                // Local left turns alone admit star-shaped winding; total turning must be one revolution.
                let mut winding = 0.0;
                for i in 0..n {
                    let e0 = vertices[(i + 1) % n] - vertices[i];
                    let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
                    winding += libm::atan2(e0.cross(e1), e0.dot(e1));
                }
                if (winding - std::f64::consts::TAU).abs() > 1e-6 {
                    return Err(SimError::InvalidArgument(
                        "polygon obstacle winds more than once; it is not simple".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Strict interior test; boundary points are not inside.
    pub fn contains_strictly(&self, p: Vec2) -> bool {
        match self {
            Obstacle::Circle { center, radius } => (p - *center).norm_sq() < radius * radius,
            Obstacle::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    (b - a).cross(p - a) > 0.0
                })
            }
        }
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounds(&self) -> (Vec2, Vec2) {
        match self {
            Obstacle::Circle { center, radius } => (
                Vec2::new(center.x - radius, center.y - radius),
                Vec2::new(center.x + radius, center.y + radius),
            ),
            Obstacle::Polygon { vertices } => {
                let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in vertices {
                    lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
                    hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
                }
                (lo, hi)
            }
        }
    }

    /// Closest boundary point with the outward normal, valid for interior points too
    /// (the normal then points toward the nearest exit).
    pub fn probe(&self, p: Vec2) -> BoundaryProbe {
        match self {
            Obstacle::Circle { center, radius } => {
                let d = p - *center;
                let r = d.norm();
                let normal = d.unit().unwrap_or(Vec2::new(1.0, 0.0));
                BoundaryProbe {
                    contact: BoundaryContact {
                        point: *center + normal * *radius,
                        normal,
                    },
                    distance: (r - radius).abs(),
                    inside: r < *radius,
                }
            }
            Obstacle::Polygon { vertices } => {
                let n = vertices.len();
                let mut best: Option<(f64, Vec2, Vec2)> = None;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let edge = b - a;
                    let t = ((p - a).dot(edge) / edge.norm_sq()).clamp(0.0, 1.0);
                    let q = a + edge * t;
                    let dist = p.distance(q);
                    // CCW winding: the outward normal is the edge rotated clockwise.
                    let edge_normal = Vec2::new(edge.y, -edge.x) / edge.norm();
                    if best.is_none_or(|(bd, _, _)| dist < bd) {
                        best = Some((dist, q, edge_normal));
                    }
                }
                let (distance, point, edge_normal) = best.expect("polygon has edges");
                let inside = self.contains_strictly(p);
                let normal = if inside {
                    edge_normal
                } else {
                    (p - point).unit().unwrap_or(edge_normal)
                };
                BoundaryProbe {
                    contact: BoundaryContact { point, normal },
                    distance,
                    inside,
                }
            }
        }
    }

    /// Earliest crossing of the segment `from → to` with this obstacle's boundary,
    /// entering from outside. Returns the segment parameter in `[0, 1]` and the
    /// outward normal at the hit.
    pub fn first_hit(&self, from: Vec2, to: Vec2) -> Option<(f64, Vec2)> {
        let dir = to - from;
        match self {
            Obstacle::Circle { center, radius } => {
                let f = from - *center;
                let a = dir.norm_sq();
                if a == 0.0 {
                    return None;
                }
                let b = 2.0 * f.dot(dir);
                let c = f.norm_sq() - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if disc < 0.0 {
                    return None;
                }
                let t = (-b - disc.sqrt()) / (2.0 * a);
                if (0.0..=1.0).contains(&t) && b < 0.0 {
                    let hit = from + dir * t;
                    let normal = (hit - *center).unit().unwrap_or(-dir.unit()?);
                    Some((t, normal))
                } else {
                    None
                }
            }
            Obstacle::Polygon { vertices } => {
                let n = vertices.len();
                let mut best: Option<(f64, Vec2)> = None;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let edge = b - a;
                    let outward = Vec2::new(edge.y, -edge.x) / edge.norm();
                    // Only edges faced from outside can be entered.
                    if dir.dot(outward) >= 0.0 {
                        continue;
                    }
                    let denom = dir.cross(edge);
                    if denom == 0.0 {
                        continue;
                    }
                    let t = (a - from).cross(edge) / denom;
                    let u = (a - from).cross(dir) / denom;
                    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)
                        && best.is_none_or(|(bt, _)| t < bt) {
                            best = Some((t, outward));
                        }
                }
                best
            }
        }
    }
}

/// Closest point on the obstacle boundary to `p` and the normal pointing into free space.
///
/// Fails with [`SimError::PenetratedObstacle`] when `p` is strictly inside.
pub fn closest_boundary_point(obstacle: &Obstacle, p: Vec2) -> Result<BoundaryContact, SimError> {
    if !p.is_finite() {
        return Err(SimError::InvalidArgument(format!(
            "non-finite query point ({}, {})",
            p.x, p.y
        )));
    }
    let probe = obstacle.probe(p);
    if probe.inside {
        return Err(SimError::PenetratedObstacle { x: p.x, y: p.y });
    }
    Ok(probe.contact)
}
