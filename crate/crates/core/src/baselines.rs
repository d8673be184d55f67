//! Classical decentralized controllers fed by the same raw observations as
//! the learned policy.
//!
//! ORCA builds one reciprocal half-plane per observed neighbour and solves a
//! small 2D linear program for the admissible velocity closest to the
//! preferred one. FMP sums a constant-magnitude goal attraction with
//! inverse-distance repulsion from neighbours. Both act in the horizontal
//! plane.

use serde::{Deserialize, Serialize};

use crate::dynamics::clip_norm2;
use crate::sensing::NeighborObservation;
use crate::Vec2;

const EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrcaParams {
    /// Look-ahead horizon `tau` (s).
    pub time_horizon: f64,
    /// Radius of each agent (m); two agents collide below twice this.
    pub radius: f64,
    pub max_speed: f64,
    /// Step used to resolve an already-overlapping pair (s).
    pub time_step: f64,
}

impl Default for OrcaParams {
    fn default() -> Self {
        Self {
            time_horizon: 2.0,
            radius: 0.75,
            max_speed: 30.0,
            time_step: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmpParams {
    /// Speed of the goal attraction (m/s).
    pub attraction_gain: f64,
    /// Repulsion gain (m^2/s).
    pub repulsion_gain: f64,
    /// Neighbours farther than this exert no force (m).
    pub repulsion_range: f64,
    pub max_speed: f64,
}

impl Default for FmpParams {
    fn default() -> Self {
        Self {
            attraction_gain: 30.0,
            repulsion_gain: 1200.0,
            repulsion_range: 10.0,
            max_speed: 30.0,
        }
    }
}

/// Geometry of a neighbour relative to the deciding agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeAgent {
    pub position: Vec2,
    /// Neighbour velocity minus own velocity.
    pub velocity: Vec2,
}

impl From<&NeighborObservation> for RelativeAgent {
    fn from(nb: &NeighborObservation) -> Self {
        Self {
            position: nb.relative_position(),
            velocity: nb.relative_velocity.truncate(),
        }
    }
}

/// A directed line; admissible velocities lie on its left
/// (`perp_dot(direction, v - point) >= 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub point: Vec2,
    pub direction: Vec2,
}

impl HalfPlane {
    /// Signed distance to the boundary, positive on the forbidden side.
    pub fn violation(&self, v: Vec2) -> f64 {
        self.direction.perp_dot(self.point - v)
    }
}

/// The ORCA half-plane for one neighbour, each agent taking half of the
/// avoidance responsibility.
pub fn orca_half_plane(
    own_velocity: Vec2,
    other: &RelativeAgent,
    params: &OrcaParams,
) -> HalfPlane {
    let rel_pos = other.position;
    let rel_vel = -other.velocity;
    let dist_sq = rel_pos.length_squared();
    let combined = 2.0 * params.radius;
    let combined_sq = combined * combined;

    let (direction, u) = if dist_sq > combined_sq {
        let inv_tau = 1.0 / params.time_horizon;
        // from the centre of the truncation disc to the relative velocity
        let w = rel_vel - rel_pos * inv_tau;
        let w_len_sq = w.length_squared();
        let dot = w.dot(rel_pos);
        if dot < 0.0 && dot * dot > combined_sq * w_len_sq {
            // closest boundary point lies on the truncation disc
            let w_len = w_len_sq.sqrt();
            let unit_w = w / w_len;
            (
                Vec2::new(unit_w.y, -unit_w.x),
                unit_w * (combined * inv_tau - w_len),
            )
        } else {
            // closest boundary point lies on a cone leg
            let leg = (dist_sq - combined_sq).sqrt();
            let direction = if rel_pos.perp_dot(w) > 0.0 {
                Vec2::new(
                    rel_pos.x * leg - rel_pos.y * combined,
                    rel_pos.x * combined + rel_pos.y * leg,
                ) / dist_sq
            } else {
                -Vec2::new(
                    rel_pos.x * leg + rel_pos.y * combined,
                    -rel_pos.x * combined + rel_pos.y * leg,
                ) / dist_sq
            };
            (direction, direction * rel_vel.dot(direction) - rel_vel)
        }
    } else {
        // already overlapping: separate within one time step
        let inv_dt = 1.0 / params.time_step;
        let w = rel_vel - rel_pos * inv_dt;
        let w_len = w.length();
        let unit_w = if w_len > 0.0 {
            w / w_len
        } else {
            -rel_pos.normalize_or(Vec2::X)
        };
        (
            Vec2::new(unit_w.y, -unit_w.x),
            unit_w * (combined * inv_dt - w_len),
        )
    };

    HalfPlane {
        point: own_velocity + u * 0.5,
        direction,
    }
}

pub fn orca_half_planes(
    own_velocity: Vec2,
    neighbors: &[RelativeAgent],
    params: &OrcaParams,
) -> Vec<HalfPlane> {
    neighbors
        .iter()
        .map(|n| orca_half_plane(own_velocity, n, params))
        .collect()
}

/// ORCA velocity: the admissible velocity (inside every half-plane and the
/// max-speed disc) closest to `preferred`. When the half-planes have no
/// common point inside the disc, returns the velocity minimizing the largest
/// penetration instead.
pub fn orca_velocity(
    own_velocity: Vec2,
    neighbors: &[RelativeAgent],
    preferred: Vec2,
    params: &OrcaParams,
) -> Vec2 {
    let lines = orca_half_planes(own_velocity, neighbors, params);
    let (failed_at, result) = solve_2d(&lines, params.max_speed, preferred, false);
    if failed_at < lines.len() {
        least_penetration(&lines, failed_at, params.max_speed, result)
    } else {
        result
    }
}

/// Optimizes along line `line_no` subject to lines `0..line_no` and the disc.
fn solve_1d(
    lines: &[HalfPlane],
    line_no: usize,
    radius: f64,
    target: Vec2,
    direction_opt: bool,
) -> Option<Vec2> {
    let line = lines[line_no];
    let dot = line.point.dot(line.direction);
    let discriminant = dot * dot + radius * radius - line.point.length_squared();
    if discriminant < 0.0 {
        return None;
    }
    let sqrt_disc = discriminant.sqrt();
    let mut t_left = -dot - sqrt_disc;
    let mut t_right = -dot + sqrt_disc;

    for other in &lines[..line_no] {
        let denominator = line.direction.perp_dot(other.direction);
        let numerator = other.direction.perp_dot(line.point - other.point);
        if denominator.abs() <= EPSILON {
            // parallel: either always or never admissible
            if numerator < 0.0 {
                return None;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }

    let t = if direction_opt {
        if target.dot(line.direction) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        line.direction
            .dot(target - line.point)
            .clamp(t_left, t_right)
    };
    Some(line.point + line.direction * t)
}

/// Incremental 2D LP. Returns the index of the first line that could not be
/// satisfied (or `lines.len()` on success) and the best velocity so far.
fn solve_2d(lines: &[HalfPlane], radius: f64, target: Vec2, direction_opt: bool) -> (usize, Vec2) {
    let mut result = if direction_opt {
        target * radius
    } else {
        clip_norm2(target, radius)
    };
    for i in 0..lines.len() {
        if lines[i].violation(result) > 0.0 {
            match solve_1d(lines, i, radius, target, direction_opt) {
                Some(r) => result = r,
                None => return (i, result),
            }
        }
    }
    (lines.len(), result)
}

/// Minimizes the maximum penetration over lines `begin..` by solving a
/// projected LP for each line in turn.
fn least_penetration(lines: &[HalfPlane], begin: usize, radius: f64, mut result: Vec2) -> Vec2 {
    let mut distance = 0.0;
    for i in begin..lines.len() {
        if lines[i].violation(result) <= distance {
            continue;
        }
        let mut projected = Vec::with_capacity(i);
        for j in 0..i {
            let det = lines[i].direction.perp_dot(lines[j].direction);
            let point = if det.abs() <= EPSILON {
                if lines[i].direction.dot(lines[j].direction) > 0.0 {
                    continue;
                }
                (lines[i].point + lines[j].point) * 0.5
            } else {
                lines[i].point
                    + lines[i].direction
                        * (lines[j].direction.perp_dot(lines[i].point - lines[j].point) / det)
            };
            projected.push(HalfPlane {
                point,
                direction: (lines[j].direction - lines[i].direction).normalize_or_zero(),
            });
        }
        let previous = result;
        let toward = Vec2::new(-lines[i].direction.y, lines[i].direction.x);
        let (failed_at, candidate) = solve_2d(&projected, radius, toward, true);
        // a failure here is numerical noise; keep the previous velocity
        result = if failed_at < projected.len() {
            previous
        } else {
            candidate
        };
        distance = lines[i].violation(result);
    }
    result
}

/// Potential-field velocity: goal attraction plus
/// `repulsion_gain * max(0, 1/d - 1/range)` away from each neighbour,
/// clipped to the maximum speed.
pub fn fmp_velocity(neighbors: &[RelativeAgent], goal_offset: Vec2, params: &FmpParams) -> Vec2 {
    let mut v = goal_offset.normalize_or_zero() * params.attraction_gain;
    for n in neighbors {
        let d = n.position.length();
        if d <= 0.0 || d >= params.repulsion_range {
            continue;
        }
        let magnitude = params.repulsion_gain * (1.0 / d - 1.0 / params.repulsion_range);
        v -= n.position / d * magnitude;
    }
    clip_norm2(v, params.max_speed)
}

/// Full speed straight at the goal, zero once inside the capture radius.
pub fn straight_line_velocity(goal_offset: Vec2, v_max: f64, capture_radius: f64) -> Vec2 {
    let d = goal_offset.length();
    if d < capture_radius || d == 0.0 {
        Vec2::ZERO
    } else {
        goal_offset / d * v_max
    }
}
