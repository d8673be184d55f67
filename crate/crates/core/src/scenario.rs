//! Episode construction and evolution for the formation-change and
//! package-delivery tasks: initial states, goal transitions, the selfish
//! per-agent reward, termination and the curriculum schedule.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{AgentState, Dimension, SwarmState};
use crate::error::{Error, Result};
use crate::Vec3;

/// Agents closer than this (m) count as colliding.
pub const COLLISION_DISTANCE: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    FormationChange,
    PackageDelivery,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScenarioKind::FormationChange => "formation_change",
            ScenarioKind::PackageDelivery => "package_delivery",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub dimension: Dimension,
    pub agents: usize,
    /// Radius of the start circle (m).
    pub circle_radius: f64,
    /// Distance below which a goal counts as reached / a package as collected (m).
    pub capture_radius: f64,
    /// Goal reward coefficient `c_p` (s/m^2).
    pub c_p: f64,
    /// Collision penalty coefficient `c_c`.
    pub c_c: f64,
    /// Avoidance radius `C` of the penalty term (m).
    pub avoidance_radius: f64,
    /// Episode length in steps.
    pub horizon: u64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::FormationChange,
            dimension: Dimension::Two,
            agents: 4,
            circle_radius: 70.0,
            capture_radius: 3.5,
            c_p: 0.3,
            c_c: 1.0,
            avoidance_radius: 7.0,
            horizon: 1500,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.agents < 1 {
            return Err(Error::Config("scenario needs at least one agent".into()));
        }
        if !(self.circle_radius > 0.0 && self.capture_radius > 0.0) {
            return Err(Error::Config(
                "circle and capture radii must be positive".into(),
            ));
        }
        if !(self.c_p >= 0.0 && self.c_c >= 0.0 && self.avoidance_radius >= 0.0) {
            return Err(Error::Config(
                "reward coefficients must be non-negative".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub reward: f64,
    /// Other agents within the avoidance radius this step.
    pub proximity_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum GoalEvent {
    PackageCollected { agent: usize, step: u64 },
    GoalReached { agent: usize, step: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoneStatus {
    pub done: bool,
    pub reached: Vec<bool>,
}

fn circle_point(radius: f64, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    Vec3::new(radius * c, radius * s, 0.0)
}

fn even_angle(i: usize, n: usize) -> f64 {
    TAU * i as f64 / n as f64
}

/// Agents evenly spaced on the circle, each heading for the antipodal point.
pub fn init_formation_change<R: Rng>(config: &ScenarioConfig, _rng: &mut R) -> SwarmState {
    let n = config.agents;
    SwarmState::new(
        (0..n)
            .map(|i| {
                let p = circle_point(config.circle_radius, even_angle(i, n));
                AgentState::at_rest(p, -p)
            })
            .collect(),
    )
}

/// Uniform point on the circle.
pub fn sample_circle_goal<R: Rng>(radius: f64, rng: &mut R) -> Vec3 {
    circle_point(radius, rng.random_range(0.0..TAU))
}

/// Agents evenly spaced on the circle with a uniformly drawn first package each.
pub fn init_package_delivery<R: Rng>(config: &ScenarioConfig, rng: &mut R) -> SwarmState {
    let n = config.agents;
    SwarmState::new(
        (0..n)
            .map(|i| {
                let p = circle_point(config.circle_radius, even_angle(i, n));
                AgentState::at_rest(p, sample_circle_goal(config.circle_radius, rng))
            })
            .collect(),
    )
}

pub fn init_state<R: Rng>(config: &ScenarioConfig, rng: &mut R) -> SwarmState {
    match config.kind {
        ScenarioKind::FormationChange => init_formation_change(config, rng),
        ScenarioKind::PackageDelivery => init_package_delivery(config, rng),
    }
}

/// Selfish reward on the true state:
/// `r_i = c_p <v_i, goal_i - p_i> - c_c * #{j != i : |p_j - p_i| <= C}`.
pub fn reward(state: &SwarmState, config: &ScenarioConfig) -> Vec<RewardRecord> {
    let c2 = config.avoidance_radius * config.avoidance_radius;
    state
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let proximity_count = state
                .agents
                .iter()
                .enumerate()
                .filter(|&(j, b)| j != i && (b.position - a.position).length_squared() <= c2)
                .count();
            let progress = a.velocity.dot(a.goal - a.position);
            RewardRecord {
                reward: config.c_p * progress - config.c_c * proximity_count as f64,
                proximity_count,
            }
        })
        .collect()
}

fn within_capture(agent: &AgentState, config: &ScenarioConfig) -> bool {
    agent.goal_offset().length() < config.capture_radius
}

/// Applies the task's goal transitions. In package delivery every agent
/// closer than the capture radius to its goal gets a fresh goal on the circle.
pub fn advance_goals<R: Rng>(
    state: &mut SwarmState,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Vec<GoalEvent> {
    if config.kind != ScenarioKind::PackageDelivery {
        return Vec::new();
    }
    let mut events = Vec::new();
    for (agent, a) in state.agents.iter_mut().enumerate() {
        if within_capture(a, config) {
            a.goal = sample_circle_goal(config.circle_radius, rng);
            events.push(GoalEvent::PackageCollected {
                agent,
                step: state.step,
            });
        }
    }
    events
}

pub fn is_done(state: &SwarmState, config: &ScenarioConfig) -> DoneStatus {
    let reached: Vec<bool> = state
        .agents
        .iter()
        .map(|a| within_capture(a, config))
        .collect();
    let horizon = state.step >= config.horizon;
    let done = match config.kind {
        ScenarioKind::FormationChange => horizon || reached.iter().all(|&r| r),
        ScenarioKind::PackageDelivery => horizon,
    };
    DoneStatus { done, reached }
}

/// Piecewise-constant agent count over training steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    /// `(training-step threshold, agent count)`, thresholds strictly increasing.
    pub entries: Vec<(u64, usize)>,
}

impl CurriculumSchedule {
    pub fn new(entries: Vec<(u64, usize)>) -> Result<Self> {
        let schedule = Self { entries };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn constant(agents: usize) -> Self {
        Self {
            entries: vec![(0, agents)],
        }
    }

    /// Grows from `start` to `end` agents in increments of `increment`, one
    /// stage per equal share of `total_steps`.
    pub fn linear(total_steps: u64, start: usize, end: usize, increment: usize) -> Result<Self> {
        if start == 0 || end < start || increment == 0 {
            return Err(Error::Config(format!(
                "bad curriculum range {start}..={end} step {increment}"
            )));
        }
        let stages = (end - start) / increment + 1;
        let entries = (0..stages)
            .map(|s| {
                let threshold = (total_steps as u128 * s as u128 / stages as u128) as u64;
                (threshold, start + s * increment)
            })
            .collect::<Vec<_>>();
        // a tiny total_steps can collapse thresholds
        let mut dedup: Vec<(u64, usize)> = Vec::with_capacity(entries.len());
        for e in entries {
            match dedup.last_mut() {
                Some(last) if last.0 == e.0 => *last = e,
                _ => dedup.push(e),
            }
        }
        Self::new(dedup)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Config("empty curriculum schedule".into()));
        }
        for w in self.entries.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Config("curriculum thresholds must increase".into()));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::Config(
                    "curriculum agent counts must not decrease".into(),
                ));
            }
        }
        if self.entries.iter().any(|e| e.1 == 0) {
            return Err(Error::Config(
                "curriculum agent counts must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Agent count of the last entry whose threshold is `<= training_step`.
/// Steps before the first threshold use the first entry.
pub fn curriculum_agent_count(schedule: &CurriculumSchedule, training_step: u64) -> Result<usize> {
    let first = schedule
        .entries
        .first()
        .ok_or_else(|| Error::Config("empty curriculum schedule".into()))?;
    Ok(schedule
        .entries
        .iter()
        .take_while(|(threshold, _)| *threshold <= training_step)
        .last()
        .unwrap_or(first)
        .1)
}
