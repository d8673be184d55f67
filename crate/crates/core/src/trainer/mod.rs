//! Independent-learning PPO over one shared policy.
//!
//! Every agent in every environment is a separate learner feeding the same
//! parameter vector: its transitions form their own trajectories and the loss
//! has no cross-agent terms.

mod adam;
mod ppo;
mod rollout;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamState};
pub use ppo::{ppo_loss, ppo_loss_and_grad, ppo_update, LossParts, UpdateStats};
pub use rollout::{
    collect_rollouts, compute_advantages, normalize_advantages, EnvPool, EpisodeRecord,
    RolloutOptions, Segment, TransitionBatch,
};

use crate::checkpoint::{Checkpoint, TrainerState};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::policy::PolicyParameters;
use crate::scenario::curriculum_agent_count;

pub const TRAIN_LOG_SCHEMA: &str = "knn-swarm/train-log/v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub learning_rate: f64,
    /// Weight of the KL(old || new) penalty.
    pub kl_coeff: f64,
    /// Ratio clip.
    pub clip: f64,
    pub train_batch: usize,
    pub minibatch: usize,
    pub sgd_iterations: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub vf_coeff: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-5,
            kl_coeff: 0.2,
            clip: 0.3,
            train_batch: 50_000,
            minibatch: 2_500,
            sgd_iterations: 20,
            gamma: 0.99,
            gae_lambda: 0.95,
            vf_coeff: 0.5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.minibatch == 0 || !self.train_batch.is_multiple_of(self.minibatch) {
            return Err(Error::Config(format!(
                "train batch {} must be a positive multiple of minibatch {}",
                self.train_batch, self.minibatch
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::Config(format!(
                "lambda must lie in [0, 1], got {}",
                self.gae_lambda
            )));
        }
        if !(self.learning_rate > 0.0 && self.clip > 0.0 && self.kl_coeff >= 0.0) {
            return Err(Error::Config(
                "learning rate and clip must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub schema: String,
    pub iteration: u64,
    pub total_steps: u64,
    pub agents: usize,
    pub reward_mean: f64,
    pub episode_reward_mean: Option<f64>,
    pub episodes: usize,
    pub collisions_per_episode: Option<f64>,
    pub kl: f64,
    pub entropy: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub wall_time_s: f64,
}

/// Result of [`Trainer::train`].
#[derive(Debug, Clone)]
pub struct TrainingReport {
    pub logs: Vec<IterationLog>,
    pub episodes: Vec<EpisodeRecord>,
    pub checkpoints: Vec<PathBuf>,
}

/// Owns the policy snapshot, the optimizer and the iteration counter.
pub struct Trainer {
    config: Config,
    policy: PolicyParameters,
    adam: Adam,
    iteration: u64,
    total_steps: u64,
}

impl Trainer {
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let policy = PolicyParameters::init(&config.policy_spec(), &config.policy(), &mut rng);
        let adam = Adam::new(policy.num_params(), config.lr);
        Ok(Self {
            config,
            policy,
            adam,
            iteration: 0,
            total_steps: 0,
        })
    }

    /// Resumes from a checkpoint written by [`Trainer::checkpoint`].
    pub fn resume(config: Config, checkpoint: Checkpoint) -> Result<Self> {
        config.validate()?;
        checkpoint.verify_config(&config)?;
        let state = checkpoint.trainer.ok_or_else(|| {
            Error::Config("checkpoint carries no optimizer state; cannot resume".into())
        })?;
        Ok(Self {
            adam: Adam::from_state(state.adam, config.lr),
            config,
            policy: checkpoint.policy,
            iteration: state.iteration,
            total_steps: state.total_steps,
        })
    }

    pub fn policy(&self) -> &PolicyParameters {
        &self.policy
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            &self.config,
            self.policy.clone(),
            Some(TrainerState {
                adam: self.adam.state().clone(),
                iteration: self.iteration,
                total_steps: self.total_steps,
            }),
        )
    }

    /// Agent count the curriculum prescribes for the next iteration.
    pub fn current_agents(&self) -> Result<usize> {
        curriculum_agent_count(&self.config.curriculum()?, self.total_steps)
    }

    /// Collect, estimate advantages, update. Returns the log row and the
    /// episodes completed during collection.
    pub fn run_iteration(&mut self) -> Result<(IterationLog, Vec<EpisodeRecord>)> {
        let started = Instant::now();
        let agents = self.current_agents()?;
        let ppo = self.config.ppo();
        let mut pool = EnvPool::new(
            self.config.env_config(agents, false),
            self.config.rollout_envs(agents),
            self.config.seed,
            self.iteration,
        )?;
        let mut batch = collect_rollouts(
            &self.policy,
            &mut pool,
            ppo.train_batch,
            &RolloutOptions::default(),
        )?;
        compute_advantages(&mut batch, ppo.gamma, ppo.gae_lambda);
        normalize_advantages(&mut batch);

        let mut shuffle = iteration_rng(self.config.seed, self.iteration);
        let stats = ppo_update(&mut self.policy, &mut self.adam, &batch, &ppo, &mut shuffle)?;

        let episodes: Vec<EpisodeRecord> = batch
            .episodes
            .iter()
            .map(|e| EpisodeRecord {
                iteration: self.iteration,
                ..*e
            })
            .collect();
        self.iteration += 1;
        self.total_steps += batch.len() as u64;
        let n_ep = episodes.len();
        let mean = |f: &dyn Fn(&EpisodeRecord) -> f64| {
            (n_ep > 0).then(|| episodes.iter().map(f).sum::<f64>() / n_ep as f64)
        };
        let log = IterationLog {
            schema: TRAIN_LOG_SCHEMA.into(),
            iteration: self.iteration,
            total_steps: self.total_steps,
            agents,
            reward_mean: batch.rewards.iter().sum::<f64>() / batch.len() as f64,
            episode_reward_mean: mean(&|e| e.agent_return),
            episodes: n_ep,
            collisions_per_episode: mean(&|e| e.collisions as f64),
            kl: stats.kl,
            entropy: stats.entropy,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        Ok((log, episodes))
    }

    /// Runs iterations until the configured step budget is spent. With an
    /// output directory, appends log rows to `train_log.jsonl` and writes
    /// checkpoints every `checkpoint_every` iterations plus one at the end.
    pub fn train(&mut self, out_dir: Option<&Path>) -> Result<TrainingReport> {
        let mut log_file = match out_dir {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                let path = dir.join("train_log.jsonl");
                let f = fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&path)
                    .map_err(|e| Error::io(&path, e))?;
                Some((BufWriter::new(f), path))
            }
            None => None,
        };
        let mut report = TrainingReport {
            logs: Vec::new(),
            episodes: Vec::new(),
            checkpoints: Vec::new(),
        };
        while self.total_steps < self.config.total_steps {
            let (log, episodes) = self.run_iteration()?;
            log::info!(
                "iter {} steps {} N={} reward/step {:.3} episode {:?} kl {:.4} entropy {:.3} ({:.1}s)",
                log.iteration,
                log.total_steps,
                log.agents,
                log.reward_mean,
                log.episode_reward_mean,
                log.kl,
                log.entropy,
                log.wall_time_s
            );
            if let Some((w, path)) = log_file.as_mut() {
                let line = serde_json::to_string(&log).expect("log row serializes");
                writeln!(w, "{line}")
                    .and_then(|_| w.flush())
                    .map_err(|e| Error::io(&*path, e))?;
            }
            let last = self.total_steps >= self.config.total_steps;
            if let Some(dir) = out_dir {
                if last
                    || self
                        .iteration
                        .is_multiple_of(self.config.checkpoint_every.max(1))
                {
                    let path = dir.join(format!("checkpoint_{:05}.json", self.iteration));
                    self.checkpoint().save(&path)?;
                    report.checkpoints.push(path);
                }
            }
            report.logs.push(log);
            report.episodes.extend(episodes);
        }
        Ok(report)
    }
}

/// Minibatch shuffling stream for one iteration.
fn iteration_rng(seed: u64, iteration: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration.wrapping_mul(2).wrapping_add(1));
    rng
}

/// Writes all log rows of a report as JSON lines.
pub fn write_log(path: &Path, logs: &[IterationLog]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for l in logs {
        writeln!(
            w,
            "{}",
            serde_json::to_string(l).expect("log row serializes")
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
