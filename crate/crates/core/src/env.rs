//! A single simulated episode stream: owns the swarm state and its RNG,
//! emits observations, applies actions and scores them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    step_swarm, step_swarm_single_integrator, AgentAction, PhysParams, SwarmState,
};
use crate::error::Result;
use crate::scenario::{self, DoneStatus, GoalEvent, RewardRecord, ScenarioConfig, ScenarioKind};
use crate::sensing::{reduce_k_nearest, sense, NoiseParams, ObservationVector, RawObservation};

/// Which transition function moves the agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionModel {
    /// Modified double integrator with yaw.
    DoubleIntegrator,
    /// Commanded velocity moves the agent directly.
    SingleIntegrator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub scenario: ScenarioConfig,
    pub phys: PhysParams,
    pub noise: NoiseParams,
    pub sensor_range: f64,
    pub k: usize,
    pub motion: MotionModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub rewards: Vec<RewardRecord>,
    pub events: Vec<GoalEvent>,
    pub status: DoneStatus,
}

#[derive(Debug, Clone)]
pub struct SwarmEnv {
    config: EnvConfig,
    state: SwarmState,
    rng: ChaCha8Rng,
    reached_once: Vec<bool>,
    warned_coincident: bool,
}

impl SwarmEnv {
    /// Builds an environment and draws its initial state from `seed`.
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self> {
        config.scenario.validate()?;
        config.phys.validate()?;
        config.noise.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = scenario::init_state(&config.scenario, &mut rng);
        Ok(Self::from_parts(config, state, rng))
    }

    /// Starts from a hand-built state instead of the scenario's initial
    /// distribution.
    pub fn with_state(config: EnvConfig, state: SwarmState, seed: u64) -> Result<Self> {
        config.phys.validate()?;
        config.noise.validate()?;
        Ok(Self::from_parts(
            config,
            state,
            ChaCha8Rng::seed_from_u64(seed),
        ))
    }

    fn from_parts(config: EnvConfig, state: SwarmState, rng: ChaCha8Rng) -> Self {
        let reached_once = vec![false; state.len()];
        Self {
            config,
            state,
            rng,
            reached_once,
            warned_coincident: false,
        }
    }

    /// Starts a fresh episode, continuing this environment's RNG stream.
    pub fn reset(&mut self) {
        self.state = scenario::init_state(&self.config.scenario, &mut self.rng);
        self.reached_once = vec![false; self.state.len()];
        self.warned_coincident = false;
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &SwarmState {
        &self.state
    }

    pub fn num_agents(&self) -> usize {
        self.state.len()
    }

    pub fn observe_raw(&mut self) -> Vec<RawObservation> {
        let c = self.config;
        let obs: Vec<RawObservation> = (0..self.state.len())
            .map(|i| {
                sense(
                    &self.state,
                    i,
                    &c.noise,
                    c.sensor_range,
                    c.scenario.dimension,
                    &mut self.rng,
                )
            })
            .collect();
        if !self.warned_coincident && obs.iter().any(|o| o.coincident) {
            self.warned_coincident = true;
            log::warn!(
                "coincident points at step {}: bearing defaulted to 0",
                self.state.step
            );
        }
        obs
    }

    pub fn reduce(&self, raw: &RawObservation) -> ObservationVector {
        reduce_k_nearest(
            raw,
            self.config.k,
            self.config.sensor_range,
            self.config.scenario.dimension,
        )
    }

    pub fn observe(&mut self) -> Vec<ObservationVector> {
        let raw = self.observe_raw();
        raw.iter().map(|r| self.reduce(r)).collect()
    }

    /// Clips and applies the joint action, scores the resulting state, then
    /// applies goal transitions and checks termination.
    pub fn step(&mut self, actions: &[AgentAction]) -> Result<StepOutcome> {
        let phys = &self.config.phys;
        let clipped: Vec<AgentAction> = actions
            .iter()
            .map(|a| a.clipped(phys.v_max, phys.omega_max))
            .collect();
        let next = match self.config.motion {
            MotionModel::DoubleIntegrator => step_swarm(&self.state, &clipped, phys)?,
            MotionModel::SingleIntegrator => {
                step_swarm_single_integrator(&self.state, &clipped, phys)?
            }
        };
        self.state = next;
        let rewards = scenario::reward(&self.state, &self.config.scenario);
        let mut events =
            scenario::advance_goals(&mut self.state, &self.config.scenario, &mut self.rng);
        let status = scenario::is_done(&self.state, &self.config.scenario);
        if self.config.scenario.kind == ScenarioKind::FormationChange {
            for (agent, (&now, once)) in status
                .reached
                .iter()
                .zip(&mut self.reached_once)
                .enumerate()
            {
                if now && !*once {
                    *once = true;
                    events.push(GoalEvent::GoalReached {
                        agent,
                        step: self.state.step,
                    });
                }
            }
        }
        Ok(StepOutcome {
            rewards,
            events,
            status,
        })
    }
}
