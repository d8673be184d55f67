//! Noisy per-agent observations and the k-nearest-neighbour reduction.
//!
//! Range membership and neighbour ranking use the true positions; only the
//! emitted quantities carry Gaussian noise. Bearings are world-frame and the
//! agent's own yaw is not observed.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Dimension, SwarmState};
use crate::{Vec2, Vec3};

/// Observation noise standard deviations, each in the natural unit of its
/// quantity (m, m/s, m, rad). Zero disables the corresponding noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub sigma_p: f64,
    pub sigma_v: f64,
    pub sigma_d: f64,
    pub sigma_phi: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            sigma_p: 1e-3,
            sigma_v: 1e-2,
            sigma_d: 1e-3,
            sigma_phi: 1e-4,
        }
    }
}

impl NoiseParams {
    pub const NONE: NoiseParams = NoiseParams {
        sigma_p: 0.0,
        sigma_v: 0.0,
        sigma_d: 0.0,
        sigma_phi: 0.0,
    };

    pub fn validate(&self) -> crate::Result<()> {
        let all = [self.sigma_p, self.sigma_v, self.sigma_d, self.sigma_phi];
        if all.iter().all(|s| s.is_finite() && *s >= 0.0) {
            Ok(())
        } else {
            Err(crate::Error::Config(format!(
                "noise deviations must be >= 0: {self:?}"
            )))
        }
    }
}

/// Sensor model settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingConfig {
    /// Sensor range `K` (m).
    pub sensor_range: f64,
    /// Number of neighbours kept by the reduction.
    pub k: usize,
    pub noise: NoiseParams,
    /// Keep observation noise on during evaluation.
    pub eval_noise: bool,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            sensor_range: 10.0,
            k: 1,
            noise: NoiseParams::default(),
            eval_noise: true,
        }
    }
}

/// One in-range neighbour as seen by the observing agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborObservation {
    pub index: usize,
    /// Noise-free distance, used for ranking only; never fed to a controller.
    pub true_distance: f64,
    pub distance: f64,
    pub bearing: f64,
    /// Velocity of the neighbour relative to the observer.
    pub relative_velocity: Vec3,
    /// Height of the neighbour above the observer (3D only, else 0).
    pub z_offset: f64,
}

impl NeighborObservation {
    /// Horizontal offset to the neighbour reconstructed from range and bearing.
    pub fn relative_position(&self) -> Vec2 {
        Vec2::from_angle(self.bearing) * self.distance
    }
}

/// Own block plus every neighbour inside the sensor range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawObservation {
    pub agent: usize,
    pub position: Vec3,
    pub velocity: Vec3,
    pub goal_distance: f64,
    pub goal_bearing: f64,
    pub goal_z_offset: f64,
    pub neighbors: Vec<NeighborObservation>,
    /// Some bearing was taken between coincident points.
    pub coincident: bool,
}

impl RawObservation {
    pub fn goal_offset(&self) -> Vec2 {
        Vec2::from_angle(self.goal_bearing) * self.goal_distance
    }
}

/// Fixed-width policy input.
///
/// Layout (2D): `[px, py, vx, vy, d*, phi*]` followed by `k` blocks of
/// `[d, phi, rvx, rvy]`. In 3D: `[px, py, pz, vx, vy, vz, d*, phi*, dz*]`
/// followed by `k` blocks of `[d, phi, rvx, rvy, rvz, dz]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationVector {
    pub values: Vec<f64>,
    /// Which neighbour slots hold a real agent; padding slots are `false`.
    pub present: Vec<bool>,
}

impl ObservationVector {
    pub fn width(&self) -> usize {
        self.values.len()
    }
}

pub fn own_block_width(dim: Dimension) -> usize {
    if dim.is_3d() {
        9
    } else {
        6
    }
}

pub fn neighbor_block_width(dim: Dimension) -> usize {
    if dim.is_3d() {
        6
    } else {
        4
    }
}

pub fn observation_width(dim: Dimension, k: usize) -> usize {
    own_block_width(dim) + k * neighbor_block_width(dim)
}

/// Bearing from `from` to `to` in `(-pi, pi]`, measured from the positive
/// x-axis. Coincident points give 0.
pub fn bearing(from: Vec2, to: Vec2) -> f64 {
    let d = to - from;
    if d == Vec2::ZERO {
        return 0.0;
    }
    d.y.atan2(d.x)
}

struct Noise<'a, R> {
    rng: &'a mut R,
}

impl<R: Rng> Noise<'_, R> {
    fn draw(&mut self, mean: f64, sigma: f64) -> f64 {
        if sigma == 0.0 {
            mean
        } else {
            Normal::new(mean, sigma)
                .expect("sigma validated non-negative")
                .sample(self.rng)
        }
    }

    fn draw_vec(&mut self, mean: Vec3, sigma: f64, dim: Dimension) -> Vec3 {
        let x = self.draw(mean.x, sigma);
        let y = self.draw(mean.y, sigma);
        let z = if dim.is_3d() {
            self.draw(mean.z, sigma)
        } else {
            mean.z
        };
        Vec3::new(x, y, z)
    }
}

/// Samples agent `agent`'s raw observation of `world`.
///
/// Draw order is fixed (own position, own velocity, goal distance, goal
/// bearing, goal height, then neighbours in index order) so that a seeded
/// generator reproduces the observation stream exactly.
pub fn sense<R: Rng>(
    world: &SwarmState,
    agent: usize,
    noise: &NoiseParams,
    sensor_range: f64,
    dim: Dimension,
    rng: &mut R,
) -> RawObservation {
    let me = &world.agents[agent];
    let mut n = Noise { rng };
    let mut coincident = false;

    let position = n.draw_vec(me.position, noise.sigma_p, dim);
    let velocity = n.draw_vec(me.velocity, noise.sigma_v, dim);
    let goal_offset = me.goal - me.position;
    let goal_distance = n.draw(goal_offset.length(), noise.sigma_d);
    coincident |= goal_offset.truncate() == Vec2::ZERO;
    let goal_bearing = n.draw(
        bearing(me.position.truncate(), me.goal.truncate()),
        noise.sigma_phi,
    );
    let goal_z_offset = if dim.is_3d() {
        n.draw(goal_offset.z, noise.sigma_p)
    } else {
        0.0
    };

    let mut neighbors = Vec::new();
    for (j, other) in world.agents.iter().enumerate() {
        if j == agent {
            continue;
        }
        let offset = other.position - me.position;
        let true_distance = offset.length();
        if true_distance > sensor_range {
            continue;
        }
        coincident |= offset.truncate() == Vec2::ZERO;
        let distance = n.draw(true_distance, noise.sigma_d);
        let bearing = n.draw(
            bearing(me.position.truncate(), other.position.truncate()),
            noise.sigma_phi,
        );
        let relative_velocity = n.draw_vec(other.velocity - me.velocity, noise.sigma_v, dim);
        let z_offset = if dim.is_3d() {
            n.draw(offset.z, noise.sigma_p)
        } else {
            0.0
        };
        neighbors.push(NeighborObservation {
            index: j,
            true_distance,
            distance,
            bearing,
            relative_velocity,
            z_offset,
        });
    }

    RawObservation {
        agent,
        position,
        velocity,
        goal_distance,
        goal_bearing,
        goal_z_offset,
        neighbors,
        coincident,
    }
}

/// Keeps the `k` nearest in-range neighbours (by true distance, ties to the
/// lower agent index) and packs the fixed-width vector. Missing neighbours
/// become phantoms at distance `sensor_range`, bearing 0, relative velocity 0.
pub fn reduce_k_nearest(
    raw: &RawObservation,
    k: usize,
    sensor_range: f64,
    dim: Dimension,
) -> ObservationVector {
    assert!(k >= 1, "k must be at least 1");
    let mut ranked: Vec<&NeighborObservation> = raw.neighbors.iter().collect();
    ranked.sort_by(|a, b| {
        a.true_distance
            .total_cmp(&b.true_distance)
            .then(a.index.cmp(&b.index))
    });

    let mut values = Vec::with_capacity(observation_width(dim, k));
    if dim.is_3d() {
        values.extend(raw.position.to_array());
        values.extend(raw.velocity.to_array());
        values.extend([raw.goal_distance, raw.goal_bearing, raw.goal_z_offset]);
    } else {
        values.extend(raw.position.truncate().to_array());
        values.extend(raw.velocity.truncate().to_array());
        values.extend([raw.goal_distance, raw.goal_bearing]);
    }

    let mut present = Vec::with_capacity(k);
    for slot in 0..k {
        match ranked.get(slot) {
            Some(nb) => {
                present.push(true);
                values.extend([nb.distance, nb.bearing]);
                if dim.is_3d() {
                    values.extend(nb.relative_velocity.to_array());
                    values.push(nb.z_offset);
                } else {
                    values.extend(nb.relative_velocity.truncate().to_array());
                }
            }
            None => {
                present.push(false);
                values.extend([sensor_range, 0.0]);
                values.extend(std::iter::repeat_n(0.0, neighbor_block_width(dim) - 2));
            }
        }
    }
    ObservationVector { values, present }
}
