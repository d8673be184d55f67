use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::SwarmState;
use crate::env::{EnvConfig, SwarmEnv};
use crate::error::{Error, Result};
use crate::policy::PolicyParameters;
use crate::scenario::{ScenarioKind, COLLISION_DISTANCE};

/// A run of transitions from one agent inside one episode. `bootstrap` is
/// the value of the state following the last transition (0 when terminal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub bootstrap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    /// Iteration that collected the episode (set by the trainer).
    pub iteration: u64,
    pub env: usize,
    pub agent: usize,
    /// Environment step at which the episode ended.
    pub local_step: u64,
    /// Undiscounted sum of this agent's rewards.
    pub agent_return: f64,
    pub length: u64,
    /// Collision onsets (closer than the collision distance) involving this agent.
    pub collisions: u32,
    pub terminal: bool,
}

/// Where a transition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Origin {
    pub env: usize,
    pub agent: usize,
    /// Index of the post-transition state in the environment's step stream.
    pub step: usize,
}

/// Flat storage of transitions, grouped by (environment, agent) with every
/// agent's trajectory contiguous.
#[derive(Debug, Clone, Default)]
pub struct TransitionBatch {
    pub obs_width: usize,
    pub action_dim: usize,
    pub observations: Vec<f64>,
    pub raw_actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    /// Policy means at collection time.
    pub old_means: Vec<f64>,
    /// Log-std at collection time (state independent).
    pub old_log_std: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub segments: Vec<Segment>,
    /// Raw GAE advantages.
    pub advantages: Vec<f64>,
    /// Advantages standardized over the batch; what the surrogate consumes.
    pub normalized_advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub origins: Vec<Origin>,
    pub episodes: Vec<EpisodeRecord>,
    /// Per-environment post-step states, only when requested.
    pub states: Vec<Vec<SwarmState>>,
}

impl TransitionBatch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.observations[i * self.obs_width..(i + 1) * self.obs_width]
    }

    pub fn raw_action(&self, i: usize) -> &[f64] {
        &self.raw_actions[i * self.action_dim..(i + 1) * self.action_dim]
    }

    pub fn old_mean(&self, i: usize) -> &[f64] {
        &self.old_means[i * self.action_dim..(i + 1) * self.action_dim]
    }

    /// Appends one transition; segments are managed by the caller.
    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        observation: &[f64],
        raw_action: &[f64],
        log_prob: f64,
        old_mean: &[f64],
        reward: f64,
        value: f64,
        done: bool,
        origin: Origin,
    ) {
        self.observations.extend_from_slice(observation);
        self.raw_actions.extend_from_slice(raw_action);
        self.log_probs.push(log_prob);
        self.old_means.extend_from_slice(old_mean);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
        self.origins.push(origin);
    }

    fn append(&mut self, mut other: TransitionBatch) {
        let offset = self.len();
        self.observations.append(&mut other.observations);
        self.raw_actions.append(&mut other.raw_actions);
        self.log_probs.append(&mut other.log_probs);
        self.old_means.append(&mut other.old_means);
        self.rewards.append(&mut other.rewards);
        self.values.append(&mut other.values);
        self.dones.append(&mut other.dones);
        self.origins.append(&mut other.origins);
        self.segments.extend(other.segments.iter().map(|s| Segment {
            start: s.start + offset,
            end: s.end + offset,
            ..*s
        }));
        self.episodes.append(&mut other.episodes);
        self.states.append(&mut other.states);
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RolloutOptions {
    pub log_states: bool,
}

/// Environments stepped in lockstep by the rollout workers, each with its
/// own action-sampling stream.
pub struct EnvPool {
    envs: Vec<(SwarmEnv, ChaCha8Rng)>,
}

impl EnvPool {
    /// `count` environments whose seeds derive from `(seed, iteration, index)`.
    pub fn new(config: EnvConfig, count: usize, seed: u64, iteration: u64) -> Result<Self> {
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        master.set_stream(iteration.wrapping_mul(2));
        let seeds: Vec<(u64, u64)> = (0..count)
            .map(|_| (master.next_u64(), master.next_u64()))
            .collect();
        Self::with_seeds(config, &seeds)
    }

    /// One environment per `(environment seed, sampler seed)` pair.
    pub fn with_seeds(config: EnvConfig, seeds: &[(u64, u64)]) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::Config("environment pool is empty".into()));
        }
        let envs = seeds
            .iter()
            .map(|&(env_seed, sampler_seed)| {
                Ok((
                    SwarmEnv::new(config, env_seed)?,
                    ChaCha8Rng::seed_from_u64(sampler_seed),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { envs })
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn num_agents(&self) -> usize {
        self.envs[0].0.num_agents()
    }
}

/// Runs the shared policy in every environment until at least `steps`
/// agent-steps are collected. Episodes cut by the horizon or by the end of
/// collection bootstrap from the value head.
pub fn collect_rollouts(
    policy: &PolicyParameters,
    pool: &mut EnvPool,
    steps: usize,
    options: &RolloutOptions,
) -> Result<TransitionBatch> {
    if pool.is_empty() {
        return Err(Error::Config("environment pool is empty".into()));
    }
    let per_env = steps.div_ceil(pool.len());
    let parts = pool
        .envs
        .par_iter_mut()
        .enumerate()
        .map(|(index, (env, rng))| run_env(policy, env, rng, index, per_env, options))
        .collect::<Result<Vec<_>>>()?;

    let mut batch = TransitionBatch {
        obs_width: policy.shape.input,
        action_dim: policy.shape.action,
        old_log_std: policy.log_std().to_vec(),
        ..TransitionBatch::default()
    };
    for part in parts {
        batch.append(part);
    }
    Ok(batch)
}

struct AgentTrack {
    buffer: TransitionBatch,
    segment_start: usize,
    episode_return: f64,
    collisions: u32,
}

fn run_env(
    policy: &PolicyParameters,
    env: &mut SwarmEnv,
    rng: &mut ChaCha8Rng,
    env_index: usize,
    agent_steps: usize,
    options: &RolloutOptions,
) -> Result<TransitionBatch> {
    let n = env.num_agents();
    let env_steps = agent_steps.div_ceil(n);
    let kind = env.config().scenario.kind;
    let mut tracks: Vec<AgentTrack> = (0..n)
        .map(|_| AgentTrack {
            buffer: TransitionBatch {
                obs_width: policy.shape.input,
                action_dim: policy.shape.action,
                ..TransitionBatch::default()
            },
            segment_start: 0,
            episode_return: 0.0,
            collisions: 0,
        })
        .collect();
    let mut close = vec![false; n * n];
    let mut episode_start = env.state().step;
    let mut states = Vec::new();
    let mut episodes = Vec::new();

    for local in 0..env_steps {
        let observations = env.observe();
        let mut actions = Vec::with_capacity(n);
        let mut pending = Vec::with_capacity(n);
        for obs in &observations {
            let out = policy.forward(obs)?;
            let sample = policy.sample_from(&out, rng);
            actions.push(sample.action);
            pending.push((out, sample));
        }
        let outcome = env.step(&actions)?;
        if options.log_states {
            states.push(env.state().clone());
        }
        count_collisions(env.state(), &mut close, &mut tracks);

        let done = outcome.status.done;
        let terminal = done
            && kind == ScenarioKind::FormationChange
            && outcome.status.reached.iter().all(|&r| r);
        for (agent, ((obs, (out, sample)), track)) in observations
            .iter()
            .zip(&pending)
            .zip(&mut tracks)
            .enumerate()
        {
            let reward = outcome.rewards[agent].reward;
            track.episode_return += reward;
            track.buffer.push(
                &obs.values,
                &sample.raw,
                sample.log_prob,
                &out.mean,
                reward,
                out.value,
                terminal,
                Origin {
                    env: env_index,
                    agent,
                    step: local,
                },
            );
        }

        let last = local + 1 == env_steps;
        if done || last {
            let bootstrap: Vec<f64> = if terminal {
                vec![0.0; n]
            } else {
                bootstrap_values(policy, env)?
            };
            for (agent, track) in tracks.iter_mut().enumerate() {
                let end = track.buffer.len();
                track.buffer.segments.push(Segment {
                    start: track.segment_start,
                    end,
                    bootstrap: bootstrap[agent],
                });
                track.segment_start = end;
                if done {
                    episodes.push(EpisodeRecord {
                        iteration: 0,
                        env: env_index,
                        agent,
                        local_step: local as u64,
                        agent_return: track.episode_return,
                        length: env.state().step - episode_start,
                        collisions: track.collisions,
                        terminal,
                    });
                    track.episode_return = 0.0;
                    track.collisions = 0;
                }
            }
            if done && !last {
                env.reset();
                episode_start = env.state().step;
                close.fill(false);
            }
        }
    }

    let mut out = TransitionBatch {
        obs_width: policy.shape.input,
        action_dim: policy.shape.action,
        ..TransitionBatch::default()
    };
    for track in tracks {
        out.append(track.buffer);
    }
    out.episodes = episodes;
    if options.log_states {
        out.states = vec![states];
    }
    Ok(out)
}

fn bootstrap_values(policy: &PolicyParameters, env: &mut SwarmEnv) -> Result<Vec<f64>> {
    env.observe()
        .iter()
        .map(|o| policy.forward(o).map(|out| out.value))
        .collect()
}

fn count_collisions(state: &SwarmState, close: &mut [bool], tracks: &mut [AgentTrack]) {
    let n = state.len();
    let limit = COLLISION_DISTANCE * COLLISION_DISTANCE;
    for i in 0..n {
        for j in i + 1..n {
            let now =
                (state.agents[i].position - state.agents[j].position).length_squared() < limit;
            if now && !close[i * n + j] {
                tracks[i].collisions += 1;
                tracks[j].collisions += 1;
            }
            close[i * n + j] = now;
        }
    }
}

/// Generalized advantage estimation per segment. Fills `advantages` and
/// `returns = advantages + values`.
pub fn compute_advantages(batch: &mut TransitionBatch, gamma: f64, lambda: f64) {
    let len = batch.len();
    batch.advantages = vec![0.0; len];
    batch.returns = vec![0.0; len];
    for seg in &batch.segments {
        let mut next_value = seg.bootstrap;
        let mut gae = 0.0;
        for t in (seg.start..seg.end).rev() {
            if batch.dones[t] {
                next_value = 0.0;
                gae = 0.0;
            }
            let delta = batch.rewards[t] + gamma * next_value - batch.values[t];
            gae = delta + gamma * lambda * gae;
            batch.advantages[t] = gae;
            batch.returns[t] = gae + batch.values[t];
            next_value = batch.values[t];
        }
    }
}

/// Standardizes the advantages to zero mean and unit standard deviation.
pub fn normalize_advantages(batch: &mut TransitionBatch) {
    let n = batch.advantages.len().max(1) as f64;
    let mean = batch.advantages.iter().sum::<f64>() / n;
    let var = batch
        .advantages
        .iter()
        .map(|a| (a - mean).powi(2))
        .sum::<f64>()
        / n;
    let std = var.sqrt().max(1e-8);
    batch.normalized_advantages = batch.advantages.iter().map(|a| (a - mean) / std).collect();
}
