//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use knn_swarm::baselines::HalfPlane;
use knn_swarm::config::Config;
use knn_swarm::dynamics::{AgentState, SwarmState};
use knn_swarm::policy::PolicyParameters;
use knn_swarm::sensing::ObservationVector;
use knn_swarm::trainer::{Segment, TransitionBatch};
use knn_swarm::Vec2;
use knn_swarm::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `v_t = target + (1 - c dt)^t (v_0 - target)`.
pub fn lag_closed_form(v0: f64, target: f64, c: f64, dt: f64, t: i32) -> f64 {
    target + (1.0 - c * dt).powi(t) * (v0 - target)
}

pub fn random_agent<R: Rng>(rng: &mut R, extent: f64, speed: f64) -> AgentState {
    let mut v = |s: f64| Vec3::new(rng.random_range(-s..s), rng.random_range(-s..s), 0.0);
    let position = v(extent);
    let velocity = v(speed);
    let goal = v(extent);
    AgentState {
        position,
        velocity,
        yaw: rng.random_range(-3.0..3.0),
        yaw_rate: rng.random_range(-1.0..1.0),
        goal,
    }
}

pub fn random_swarm<R: Rng>(rng: &mut R, n: usize, extent: f64) -> SwarmState {
    SwarmState::new((0..n).map(|_| random_agent(rng, extent, 30.0)).collect())
}

/// Reward written out component by component.
pub fn brute_force_reward(
    state: &SwarmState,
    c_p: f64,
    c_c: f64,
    avoidance: f64,
) -> Vec<(f64, usize)> {
    let a = &state.agents;
    let mut out = Vec::new();
    for i in 0..a.len() {
        let gx = a[i].goal.x - a[i].position.x;
        let gy = a[i].goal.y - a[i].position.y;
        let gz = a[i].goal.z - a[i].position.z;
        let dot = a[i].velocity.x * gx + a[i].velocity.y * gy + a[i].velocity.z * gz;
        let mut count = 0;
        for j in 0..a.len() {
            if j == i {
                continue;
            }
            let dx = a[j].position.x - a[i].position.x;
            let dy = a[j].position.y - a[i].position.y;
            let dz = a[j].position.z - a[i].position.z;
            if dx * dx + dy * dy + dz * dz <= avoidance * avoidance {
                count += 1;
            }
        }
        out.push((c_p * dot - c_c * count as f64, count));
    }
    out
}

/// Indices of the other agents within `range` of `agent`, fully sorted by
/// distance then index.
pub fn full_sort_neighbors(state: &SwarmState, agent: usize, range: f64) -> Vec<(f64, usize)> {
    let me = state.agents[agent].position;
    let mut all: Vec<(f64, usize)> = state
        .agents
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != agent)
        .map(|(j, a)| {
            let d = a.position - me;
            ((d.x * d.x + d.y * d.y + d.z * d.z).sqrt(), j)
        })
        .filter(|(d, _)| *d <= range)
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    all
}

fn admissible(lines: &[HalfPlane], max_speed: f64, v: Vec2) -> bool {
    // points sampled on a boundary land on either side by rounding
    let eps = 1e-9;
    v.length() <= max_speed + eps && lines.iter().all(|l| l.violation(v) <= eps)
}

/// 1D grid over `t in [lo, hi]` for the curve `at`, then zoom around the best
/// admissible sample.
fn grid_search_curve(
    at: impl Fn(f64) -> Vec2,
    lo: f64,
    hi: f64,
    lines: &[HalfPlane],
    max_speed: f64,
    preferred: Vec2,
) -> Option<Vec2> {
    let cost = |t: f64| (at(t) - preferred).length();
    let search = |lo: f64, hi: f64, n: usize| {
        let step = (hi - lo) / n as f64;
        (0..=n)
            .map(|i| lo + i as f64 * step)
            .filter(|&t| admissible(lines, max_speed, at(t)))
            .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
    };
    let n = 4000;
    let mut step = (hi - lo) / n as f64;
    let mut t = search(lo, hi, n)?;
    while step > 1e-11 {
        t = search(t - 2.0 * step, t + 2.0 * step, 40).unwrap_or(t);
        step /= 10.0;
    }
    Some(at(t))
}

/// Closest admissible velocity to `preferred` by grid search: a refined grid
/// over the speed disc plus refined 1D grids along every boundary (the
/// optimum of a convex problem lies on one unless `preferred` is admissible).
/// `None` when no sample is admissible.
pub fn grid_search_lp(lines: &[HalfPlane], max_speed: f64, preferred: Vec2) -> Option<Vec2> {
    let mut best: Option<Vec2> = None;
    let consider = |v: Vec2, best: &mut Option<Vec2>| {
        if admissible(lines, max_speed, v)
            && best.is_none_or(|b| (v - preferred).length() < (b - preferred).length())
        {
            *best = Some(v);
        }
    };
    let n = 400;
    let h = 2.0 * max_speed / n as f64;
    for i in 0..=n {
        for j in 0..=n {
            let v = Vec2::new(-max_speed + i as f64 * h, -max_speed + j as f64 * h);
            consider(v, &mut best);
        }
    }
    // the admissible set is convex: walk the incumbent toward the optimum,
    // then zoom in
    let mut h = h;
    while h > 1e-7 {
        for _ in 0..200 {
            let centre = best?;
            let m = 20;
            let step = 4.0 * h / m as f64;
            for i in 0..=m {
                for j in 0..=m {
                    let v =
                        centre + Vec2::new(-2.0 * h + i as f64 * step, -2.0 * h + j as f64 * step);
                    consider(v, &mut best);
                }
            }
            if best == Some(centre) {
                break;
            }
        }
        h /= 2.0;
    }
    let mut candidates: Vec<Vec2> = best.into_iter().collect();
    candidates.extend(grid_search_curve(
        |t| Vec2::from_angle(t) * max_speed,
        0.0,
        std::f64::consts::TAU,
        lines,
        max_speed,
        preferred,
    ));
    for l in lines {
        candidates.extend(grid_search_curve(
            |t| l.point + l.direction * t,
            -l.point.length() - max_speed,
            l.point.length() + max_speed,
            lines,
            max_speed,
            preferred,
        ));
    }
    candidates.into_iter().min_by(|a, b| {
        (*a - preferred)
            .length()
            .total_cmp(&(*b - preferred).length())
    })
}

/// Relative velocity `w` collides within `tau` with a neighbour at relative
/// position `p` and combined radius `r`.
pub fn in_velocity_obstacle(p: Vec2, w: Vec2, r: f64, tau: f64) -> bool {
    // exists s >= 1/tau with |w - s p| <= r s
    let a = p.length_squared() - r * r;
    let s = (w.dot(p) / a).max(1.0 / tau);
    (w - p * s).length_squared() <= r * r * s * s
}

/// Smallest change `u` moving `w` (inside the obstacle) onto its boundary,
/// by bisection along many rays.
pub fn velocity_obstacle_escape(p: Vec2, w: Vec2, r: f64, tau: f64) -> Vec2 {
    assert!(in_velocity_obstacle(p, w, r, tau));
    let rays = 20_000;
    let mut best = Vec2::splat(f64::INFINITY);
    for k in 0..rays {
        let dir = Vec2::from_angle(std::f64::consts::TAU * k as f64 / rays as f64);
        let (mut lo, mut hi) = (0.0, 1.0);
        while in_velocity_obstacle(p, w + dir * hi, r, tau) {
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if in_velocity_obstacle(p, w + dir * mid, r, tau) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if hi < best.length() {
            best = dir * hi;
        }
    }
    best
}

/// GAE by its forward definition `A_t = sum_l (gamma lambda)^l delta_{t+l}`
/// over one trajectory that ends in `bootstrap` (0 if terminal).
pub fn gae_forward(
    rewards: &[f64],
    values: &[f64],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let next = |t: usize| if t + 1 < n { values[t + 1] } else { bootstrap };
    let delta: Vec<f64> = (0..n)
        .map(|t| rewards[t] + gamma * next(t) - values[t])
        .collect();
    (0..n)
        .map(|t| {
            (t..n)
                .map(|l| (gamma * lambda).powi((l - t) as i32) * delta[l])
                .sum()
        })
        .collect()
}

/// Discounted return of a reward sequence.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// Clipped surrogate of a single transition, written from scratch.
pub fn clipped_term(new_log_prob: f64, old_log_prob: f64, advantage: f64, clip: f64) -> f64 {
    let ratio = (new_log_prob - old_log_prob).exp();
    let clipped = if ratio < 1.0 - clip {
        1.0 - clip
    } else if ratio > 1.0 + clip {
        1.0 + clip
    } else {
        ratio
    };
    let a = ratio * advantage;
    let b = clipped * advantage;
    if a < b {
        a
    } else {
        b
    }
}

/// Diagonal Gaussian log-density.
pub fn normal_log_density(x: &[f64], mean: &[f64], std: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..x.len() {
        let z = (x[i] - mean[i]) / std[i];
        total += -0.5 * z * z - std[i].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    total
}

/// KL(old || new) between diagonal Gaussians.
pub fn gaussian_kl(mean_old: &[f64], std_old: &[f64], mean_new: &[f64], std_new: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..mean_old.len() {
        total += (std_new[i] / std_old[i]).ln()
            + (std_old[i].powi(2) + (mean_old[i] - mean_new[i]).powi(2))
                / (2.0 * std_new[i].powi(2))
            - 0.5;
    }
    total
}

pub fn polyline_length(points: &[Vec3]) -> f64 {
    points
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            (d.x * d.x + d.y * d.y + d.z * d.z).sqrt()
        })
        .sum()
}

/// A trace with hand-made positions: `paths[t][i]` is agent `i` after step
/// `t + 1`. Goals stay at their initial values.
pub fn synthetic_trace(
    config: &knn_swarm::config::Config,
    initial: Vec<AgentState>,
    paths: &[Vec<Vec3>],
) -> knn_swarm::eval::EpisodeTrace {
    use knn_swarm::eval::{EpisodeTrace, TraceHeader, TraceStep, TRACE_SCHEMA};
    let n = initial.len();
    let steps = paths
        .iter()
        .enumerate()
        .map(|(t, ps)| TraceStep {
            step: t as u64 + 1,
            agents: ps
                .iter()
                .zip(&initial)
                .map(|(p, a)| AgentState { position: *p, ..*a })
                .collect(),
            actions: vec![Default::default(); n],
            rewards: vec![0.0; n],
            events: Vec::new(),
        })
        .collect();
    EpisodeTrace {
        header: TraceHeader {
            schema: TRACE_SCHEMA.into(),
            config: config.clone(),
            config_fingerprint: config.fingerprint(),
            seed: 0,
            controller: "straight".into(),
            policy_fingerprint: None,
            custom_start: true,
            initial: SwarmState::new(initial),
        },
        steps,
        wall_time_s: 0.0,
    }
}

pub fn policy(seed: u64) -> PolicyParameters {
    let config = Config::default();
    PolicyParameters::init(
        &config.policy_spec(),
        &config.policy(),
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
}

pub fn observation<R: Rng>(rng: &mut R, width: usize) -> Vec<f64> {
    // physical magnitudes: positions, velocities, distances, bearings
    let scales = [70.0, 70.0, 30.0, 30.0, 140.0, 3.0, 10.0, 3.0, 30.0, 30.0];
    (0..width)
        .map(|j| rng.random_range(-1.0..1.0) * scales[j % scales.len()])
        .collect()
}

pub fn obs_vector(values: &[f64]) -> ObservationVector {
    ObservationVector {
        values: values.to_vec(),
        present: vec![true],
    }
}

/// A batch whose actions were sampled by `old` and whose advantages and
/// returns are arbitrary.
pub fn synthetic_batch(old: &PolicyParameters, n: usize, seed: u64) -> TransitionBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batch = TransitionBatch {
        obs_width: old.shape.input,
        action_dim: old.shape.action,
        old_log_std: old.log_std().to_vec(),
        ..TransitionBatch::default()
    };
    for _ in 0..n {
        let obs = observation(&mut rng, old.shape.input);
        let out = old.forward(&obs_vector(&obs)).unwrap();
        let sample = old.sample_from(&out, &mut rng);
        batch.observations.extend(&obs);
        batch.raw_actions.extend(&sample.raw);
        batch.log_probs.push(sample.log_prob);
        batch.old_means.extend(&out.mean);
        batch.rewards.push(0.0);
        batch.values.push(out.value);
        batch.dones.push(false);
        let adv: f64 = StandardNormal.sample(&mut rng);
        batch.advantages.push(adv);
        batch.normalized_advantages.push(adv);
        batch.returns.push(rng.random_range(-5000.0..5000.0));
    }
    batch.segments.push(Segment {
        start: 0,
        end: n,
        bootstrap: 0.0,
    });
    batch
}

pub fn perturbed(p: &PolicyParameters, scale: f64, seed: u64) -> PolicyParameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = p.clone();
    for v in &mut q.params {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += scale * z;
    }
    q
}
