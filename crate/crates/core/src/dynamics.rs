//! Swarm state and the deterministic transition function.
//!
//! Agents follow a modified double integrator: the commanded velocity is
//! rotated by the agent's yaw and tracked through a first-order lag, and the
//! yaw rate tracks its own command the same way. Positions and velocities are
//! stored as [`Vec3`]; in 2D runs the z components stay exactly zero.
//!
//! A plain single integrator is provided for the classical baselines.

use glam::DMat2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Vec2, Vec3};

/// Spatial dimension of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "2d")]
    Two,
    #[serde(rename = "3d")]
    Three,
}

impl Dimension {
    pub fn is_3d(self) -> bool {
        matches!(self, Dimension::Three)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Unwrapped yaw angle in radians.
    pub yaw: f64,
    pub yaw_rate: f64,
    pub goal: Vec3,
}

impl AgentState {
    pub fn at_rest(position: Vec3, goal: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::ZERO,
            yaw: 0.0,
            yaw_rate: 0.0,
            goal,
        }
    }

    pub fn goal_offset(&self) -> Vec3 {
        self.goal - self.position
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.velocity.is_finite()
            && self.yaw.is_finite()
            && self.yaw_rate.is_finite()
            && self.goal.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentAction {
    pub target_velocity: Vec3,
    pub target_yaw_rate: f64,
}

impl AgentAction {
    pub fn velocity_only(target_velocity: Vec3) -> Self {
        Self {
            target_velocity,
            target_yaw_rate: 0.0,
        }
    }

    /// Projects the action onto the admissible set: the velocity is rescaled
    /// to norm `v_max` when it exceeds it and the yaw rate is clamped.
    pub fn clipped(self, v_max: f64, omega_max: f64) -> Self {
        Self {
            target_velocity: clip_norm(self.target_velocity, v_max),
            target_yaw_rate: self.target_yaw_rate.clamp(-omega_max, omega_max),
        }
    }

    pub fn is_admissible(&self, v_max: f64, omega_max: f64) -> bool {
        // Small slack for the rounding of a norm-rescaled vector.
        self.target_velocity.length() <= v_max * (1.0 + 1e-12)
            && self.target_yaw_rate.abs() <= omega_max
    }
}

/// Rescales `v` to norm `max` if it is longer.
pub fn clip_norm(v: Vec3, max: f64) -> Vec3 {
    let len = v.length();
    if len > max {
        v * (max / len)
    } else {
        v
    }
}

pub(crate) fn clip_norm2(v: Vec2, max: f64) -> Vec2 {
    let len = v.length();
    if len > max {
        v * (max / len)
    } else {
        v
    }
}

/// Physical constants of the motion model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Time step (s).
    pub dt: f64,
    /// Velocity lag coefficient (1/s).
    pub c_v: f64,
    /// Yaw-rate lag coefficient (1/s).
    pub c_w: f64,
    /// Maximum commanded speed (m/s).
    pub v_max: f64,
    /// Maximum commanded yaw rate (1/s).
    pub omega_max: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            dt: 0.02,
            c_v: 1.0,
            c_w: 1.0,
            v_max: 30.0,
            omega_max: 15.0,
        }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        let stable = |c: f64| c * self.dt > 0.0 && c * self.dt < 2.0;
        if self.dt.is_nan() || self.dt <= 0.0 {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !stable(self.c_v) || !stable(self.c_w) {
            return Err(Error::Config(format!(
                "c_v*dt and c_w*dt must lie in (0, 2), got {} and {}",
                self.c_v * self.dt,
                self.c_w * self.dt
            )));
        }
        if !(self.v_max > 0.0 && self.omega_max > 0.0) {
            return Err(Error::Config("v_max and omega_max must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub agents: Vec<AgentState>,
    pub step: u64,
}

impl SwarmState {
    pub fn new(agents: Vec<AgentState>) -> Self {
        Self { agents, step: 0 }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }
}

/// Yaw rotation `[[cos, -sin], [sin, cos]]`.
pub fn rotation_matrix(yaw: f64) -> DMat2 {
    let (s, c) = yaw.sin_cos();
    DMat2::from_cols(Vec2::new(c, s), Vec2::new(-s, c))
}

/// Advances one agent by one time step.
///
/// Semi-explicit Euler in the order position, velocity, yaw, yaw rate: the
/// position integrates the pre-update velocity and the yaw the pre-update
/// yaw rate. The z component of the command bypasses the yaw rotation.
///
/// Panics on non-finite input.
pub fn step_agent(state: &AgentState, action: &AgentAction, params: &PhysParams) -> AgentState {
    assert!(
        state.is_finite()
            && action.target_velocity.is_finite()
            && action.target_yaw_rate.is_finite(),
        "non-finite agent state or action: {state:?} {action:?}"
    );
    let dt = params.dt;
    let rotated = rotation_matrix(state.yaw) * action.target_velocity.truncate();
    let target = rotated.extend(action.target_velocity.z);
    AgentState {
        position: state.position + state.velocity * dt,
        velocity: state.velocity + (target - state.velocity) * (params.c_v * dt),
        yaw: state.yaw + state.yaw_rate * dt,
        yaw_rate: state.yaw_rate + (action.target_yaw_rate - state.yaw_rate) * (params.c_w * dt),
        goal: state.goal,
    }
}

/// The swarm transition function: every agent steps independently.
pub fn step_swarm(
    state: &SwarmState,
    actions: &[AgentAction],
    params: &PhysParams,
) -> Result<SwarmState> {
    check_count(state, actions.len())?;
    Ok(SwarmState {
        agents: state
            .agents
            .iter()
            .zip(actions)
            .map(|(agent, action)| step_agent(agent, action, params))
            .collect(),
        step: state.step + 1,
    })
}

/// `p' = p + dt * v`.
pub fn step_single_integrator(position: Vec2, velocity_action: Vec2, dt: f64) -> Vec2 {
    position + velocity_action * dt
}

/// Single-integrator transition for a whole swarm: the commanded velocity
/// becomes the agent's velocity and moves it directly. Yaw is left untouched.
pub fn step_swarm_single_integrator(
    state: &SwarmState,
    actions: &[AgentAction],
    params: &PhysParams,
) -> Result<SwarmState> {
    check_count(state, actions.len())?;
    Ok(SwarmState {
        agents: state
            .agents
            .iter()
            .zip(actions)
            .map(|(agent, action)| {
                let v = action.target_velocity;
                assert!(v.is_finite(), "non-finite velocity command {v:?}");
                AgentState {
                    position: agent.position + v * params.dt,
                    velocity: v,
                    ..*agent
                }
            })
            .collect(),
        step: state.step + 1,
    })
}

fn check_count(state: &SwarmState, actions: usize) -> Result<()> {
    if actions != state.len() {
        return Err(Error::ActionCount {
            expected: state.len(),
            actual: actions,
        });
    }
    Ok(())
}
