//! The flat run configuration. Keys mirror the usual symbols (`K`, `N`,
//! `B_m`, ...) and every run artifact carries the SHA-256 fingerprint of the
//! canonical JSON form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::baselines::{FmpParams, OrcaParams};
use crate::dynamics::{Dimension, PhysParams};
use crate::env::{EnvConfig, MotionModel};
use crate::error::{Error, Result};
use crate::policy::{PolicyConfig, PolicySpec};
use crate::scenario::{CurriculumSchedule, ScenarioConfig, ScenarioKind};
use crate::sensing::NoiseParams;
use crate::trainer::PpoConfig;

pub const CONFIG_SCHEMA: &str = "knn-swarm/config/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub schema: String,

    pub dt: f64,
    pub c_v: f64,
    pub c_w: f64,
    pub v_max: f64,
    pub omega_max: f64,

    pub sigma_p: f64,
    pub sigma_v: f64,
    pub sigma_d: f64,
    pub sigma_phi: f64,
    #[serde(rename = "K")]
    pub sensor_range: f64,
    pub k: usize,
    pub eval_noise: bool,

    pub scenario: ScenarioKind,
    pub dimension: Dimension,
    #[serde(rename = "N")]
    pub agents: usize,
    pub radius: f64,
    pub capture_radius: f64,
    #[serde(rename = "C")]
    pub avoidance_radius: f64,
    pub c_p: f64,
    pub c_c: f64,
    pub horizon: u64,
    pub seed: u64,

    pub gamma: f64,
    pub lambda: f64,
    pub lr: f64,
    pub beta: f64,
    pub epsilon: f64,
    #[serde(rename = "B")]
    pub train_batch: usize,
    #[serde(rename = "B_m")]
    pub minibatch: usize,
    #[serde(rename = "M")]
    pub sgd_iterations: usize,
    pub vf_coeff: f64,
    pub total_steps: u64,
    pub num_envs: usize,
    pub checkpoint_every: u64,
    pub curriculum_start: usize,
    pub curriculum_end: usize,
    pub curriculum_increment: usize,

    pub hidden: usize,
    pub initial_log_std: f64,
    pub yaw_rate_scale: f64,
    pub value_scale: f64,

    pub baseline_motion: MotionModel,
    pub orca_tau: f64,
    pub orca_radius: f64,
    pub fmp_attraction: f64,
    pub fmp_repulsion: f64,
    pub fmp_range: f64,
}

impl Default for Config {
    fn default() -> Self {
        let phys = PhysParams::default();
        let noise = NoiseParams::default();
        let scenario = ScenarioConfig::default();
        let ppo = PpoConfig::default();
        let policy = PolicyConfig::default();
        let orca = OrcaParams::default();
        let fmp = FmpParams::default();
        Self {
            schema: CONFIG_SCHEMA.into(),
            dt: phys.dt,
            c_v: phys.c_v,
            c_w: phys.c_w,
            v_max: phys.v_max,
            omega_max: phys.omega_max,
            sigma_p: noise.sigma_p,
            sigma_v: noise.sigma_v,
            sigma_d: noise.sigma_d,
            sigma_phi: noise.sigma_phi,
            sensor_range: 10.0,
            k: 1,
            eval_noise: true,
            scenario: scenario.kind,
            dimension: scenario.dimension,
            agents: scenario.agents,
            radius: scenario.circle_radius,
            capture_radius: scenario.capture_radius,
            avoidance_radius: scenario.avoidance_radius,
            c_p: scenario.c_p,
            c_c: scenario.c_c,
            horizon: scenario.horizon,
            seed: 0,
            gamma: ppo.gamma,
            lambda: ppo.gae_lambda,
            lr: ppo.learning_rate,
            beta: ppo.kl_coeff,
            epsilon: ppo.clip,
            train_batch: ppo.train_batch,
            minibatch: ppo.minibatch,
            sgd_iterations: ppo.sgd_iterations,
            vf_coeff: ppo.vf_coeff,
            total_steps: 3_000_000,
            num_envs: 8,
            checkpoint_every: 5,
            curriculum_start: 4,
            curriculum_end: 40,
            curriculum_increment: 2,
            hidden: policy.hidden,
            initial_log_std: policy.initial_log_std,
            yaw_rate_scale: policy.yaw_rate_scale,
            value_scale: policy.value_scale,
            baseline_motion: MotionModel::SingleIntegrator,
            orca_tau: orca.time_horizon,
            orca_radius: orca.radius,
            fmp_attraction: fmp.attraction_gain,
            fmp_repulsion: fmp.repulsion_gain,
            fmp_range: fmp.repulsion_range,
        }
    }
}

/// Unit annotations written next to each key.
const UNITS: &[(&str, &str)] = &[
    ("dt", "s"),
    ("c_v", "1/s, velocity lag rate"),
    ("c_w", "1/s, yaw-rate lag rate"),
    ("v_max", "m/s"),
    ("omega_max", "rad/s"),
    ("sigma_p", "m"),
    ("sigma_v", "m/s"),
    ("sigma_d", "m"),
    ("sigma_phi", "rad"),
    ("K", "m, sensor range"),
    ("k", "neighbours in the observation"),
    ("eval_noise", "observation noise during evaluation"),
    ("scenario", "formation_change | package_delivery"),
    ("dimension", "2d | 3d"),
    ("N", "agents (evaluation; training follows the curriculum)"),
    ("radius", "m, start circle"),
    ("capture_radius", "m"),
    ("C", "m, avoidance radius of the penalty"),
    ("c_p", "s/m^2"),
    ("c_c", "penalty per neighbour within C"),
    ("horizon", "steps"),
    ("gamma", "discount"),
    ("lambda", "GAE"),
    ("lr", "learning rate"),
    ("beta", "KL coefficient"),
    ("epsilon", "ratio clip"),
    ("B", "agent-steps per training batch"),
    ("B_m", "minibatch"),
    ("M", "SGD epochs per batch"),
    ("vf_coeff", "value loss weight"),
    ("total_steps", "agent-steps"),
    ("num_envs", "max parallel environments per iteration"),
    ("checkpoint_every", "iterations"),
    ("hidden", "units per hidden layer"),
    ("yaw_rate_scale", "rad/s per unit of network output"),
    ("value_scale", "reward units per unit of value output"),
    ("baseline_motion", "single_integrator | double_integrator"),
    ("orca_tau", "s"),
    ("orca_radius", "m"),
    ("fmp_attraction", "m/s"),
    ("fmp_repulsion", "m^2/s"),
    ("fmp_range", "m"),
];

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Format {
            what: "config",
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// TOML text with a unit comment after each key.
    pub fn to_toml_string(&self) -> String {
        let plain = toml::to_string(self).expect("config serializes");
        let mut out = String::new();
        for line in plain.lines() {
            let key = line.split('=').next().unwrap_or("").trim();
            match UNITS.iter().find(|(k, _)| *k == key) {
                Some((_, unit)) => {
                    let _ = writeln!(out, "{line:<32} # {unit}");
                }
                None => {
                    let _ = writeln!(out, "{line}");
                }
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported config schema {:?} (expected {CONFIG_SCHEMA:?})",
                self.schema
            )));
        }
        self.physics().validate()?;
        self.noise().validate()?;
        self.scenario_config(self.agents).validate()?;
        self.ppo().validate()?;
        if self.k == 0 || self.sensor_range.is_nan() || self.sensor_range <= 0.0 {
            return Err(Error::Config("k and K must be positive".into()));
        }
        if self.num_envs == 0 || self.hidden == 0 {
            return Err(Error::Config("num_envs and hidden must be positive".into()));
        }
        if !(self.value_scale > 0.0 && self.yaw_rate_scale > 0.0) {
            return Err(Error::Config(
                "value_scale and yaw_rate_scale must be positive".into(),
            ));
        }
        if !(self.orca_tau > 0.0 && self.orca_radius > 0.0 && self.fmp_range > 0.0) {
            return Err(Error::Config(
                "baseline radii and horizons must be positive".into(),
            ));
        }
        if !(self.fmp_attraction >= 0.0 && self.fmp_repulsion >= 0.0) {
            return Err(Error::Config("FMP gains must be non-negative".into()));
        }
        self.curriculum()?;
        Ok(())
    }

    pub fn physics(&self) -> PhysParams {
        PhysParams {
            dt: self.dt,
            c_v: self.c_v,
            c_w: self.c_w,
            v_max: self.v_max,
            omega_max: self.omega_max,
        }
    }

    pub fn noise(&self) -> NoiseParams {
        NoiseParams {
            sigma_p: self.sigma_p,
            sigma_v: self.sigma_v,
            sigma_d: self.sigma_d,
            sigma_phi: self.sigma_phi,
        }
    }

    pub fn scenario_config(&self, agents: usize) -> ScenarioConfig {
        ScenarioConfig {
            kind: self.scenario,
            dimension: self.dimension,
            agents,
            circle_radius: self.radius,
            capture_radius: self.capture_radius,
            c_p: self.c_p,
            c_c: self.c_c,
            avoidance_radius: self.avoidance_radius,
            horizon: self.horizon,
            seed: self.seed,
        }
    }

    /// Environment for the learned policy. Evaluation drops observation
    /// noise unless `eval_noise` is set.
    pub fn env_config(&self, agents: usize, eval: bool) -> EnvConfig {
        EnvConfig {
            scenario: self.scenario_config(agents),
            phys: self.physics(),
            noise: if eval && !self.eval_noise {
                NoiseParams::NONE
            } else {
                self.noise()
            },
            sensor_range: self.sensor_range,
            k: self.k,
            motion: MotionModel::DoubleIntegrator,
        }
    }

    /// Evaluation environment for a classical controller.
    pub fn baseline_env_config(&self, agents: usize) -> EnvConfig {
        EnvConfig {
            motion: self.baseline_motion,
            ..self.env_config(agents, true)
        }
    }

    pub fn policy(&self) -> PolicyConfig {
        PolicyConfig {
            hidden: self.hidden,
            initial_log_std: self.initial_log_std,
            yaw_rate_scale: self.yaw_rate_scale,
            value_scale: self.value_scale,
        }
    }

    pub fn policy_spec(&self) -> PolicySpec {
        PolicySpec {
            dimension: self.dimension,
            k: self.k,
            circle_radius: self.radius,
            sensor_range: self.sensor_range,
            v_max: self.v_max,
            omega_max: self.omega_max,
        }
    }

    pub fn ppo(&self) -> PpoConfig {
        PpoConfig {
            learning_rate: self.lr,
            kl_coeff: self.beta,
            clip: self.epsilon,
            train_batch: self.train_batch,
            minibatch: self.minibatch,
            sgd_iterations: self.sgd_iterations,
            gamma: self.gamma,
            gae_lambda: self.lambda,
            vf_coeff: self.vf_coeff,
        }
    }

    pub fn curriculum(&self) -> Result<CurriculumSchedule> {
        if self.curriculum_start == self.curriculum_end {
            return Ok(CurriculumSchedule::constant(self.curriculum_start));
        }
        CurriculumSchedule::linear(
            self.total_steps,
            self.curriculum_start,
            self.curriculum_end,
            self.curriculum_increment,
        )
    }

    /// Environments per training iteration: as many as give each one at
    /// least a full horizon of steps, between 1 and `num_envs`.
    pub fn rollout_envs(&self, agents: usize) -> usize {
        let per_env = agents as u64 * self.horizon;
        ((self.train_batch as u64 / per_env.max(1)) as usize).clamp(1, self.num_envs)
    }

    pub fn orca(&self) -> OrcaParams {
        OrcaParams {
            time_horizon: self.orca_tau,
            radius: self.orca_radius,
            max_speed: self.v_max,
            time_step: self.dt,
        }
    }

    pub fn fmp(&self) -> FmpParams {
        FmpParams {
            attraction_gain: self.fmp_attraction,
            repulsion_gain: self.fmp_repulsion,
            repulsion_range: self.fmp_range,
            max_speed: self.v_max,
        }
    }

    fn flat(&self) -> BTreeMap<String, Value> {
        match serde_json::to_value(self).expect("config serializes") {
            Value::Object(map) => map.into_iter().collect(),
            _ => unreachable!("config is a struct"),
        }
    }

    /// Hex SHA-256 of the key-sorted JSON encoding.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(&self.flat()).expect("config serializes");
        hex_digest(canonical.as_bytes())
    }

    /// One `key: ours -> theirs` line per differing key.
    pub fn diff(&self, other: &Config) -> Vec<String> {
        let a = self.flat();
        let b = other.flat();
        a.iter()
            .filter(|(k, v)| b.get(*k) != Some(v))
            .map(|(k, v)| {
                format!(
                    "{k}: {v} -> {}",
                    b.get(k).map_or("<missing>".into(), |x| x.to_string())
                )
            })
            .collect()
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}
