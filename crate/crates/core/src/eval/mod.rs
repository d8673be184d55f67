//! Evaluation harness: runs a controller through seeded episodes, records
//! traces, scores them and replays them.

mod metrics;
mod plot;
mod trace;

use std::time::Instant;

use rayon::prelude::*;

pub use metrics::{
    aggregate, arrival_steps, collision_count, compute_metrics, extra_time_to_goal,
    extra_travelled_distance, format_table, min_distance_series, min_interagent_distance,
    packages_per_agent, MetricsReport, MetricsSummary,
};
pub use plot::{min_distance_csv, trajectories_csv, write_plot_data};
pub use trace::{EpisodeTrace, TraceEnd, TraceHeader, TraceStep, TRACE_SCHEMA};

use crate::baselines::{
    fmp_velocity, orca_velocity, straight_line_velocity, FmpParams, OrcaParams, RelativeAgent,
};
use crate::config::Config;
use crate::dynamics::{AgentAction, SwarmState};
use crate::env::{EnvConfig, SwarmEnv};
use crate::error::{Error, Result};
use crate::policy::PolicyParameters;
use crate::sensing::RawObservation;
use crate::{Vec2, Vec3};

pub const CONTROLLER_NAMES: [&str; 4] = ["policy", "orca", "fmp", "straight"];

/// Who picks the actions during evaluation.
#[derive(Debug, Clone)]
pub enum Controller {
    /// The learned policy, acting on its mean.
    Policy(Box<PolicyParameters>),
    Orca(OrcaParams),
    Fmp(FmpParams),
    /// Full speed straight at the goal.
    Straight,
}

impl Controller {
    pub fn name(&self) -> &'static str {
        match self {
            Controller::Policy(_) => "policy",
            Controller::Orca(_) => "orca",
            Controller::Fmp(_) => "fmp",
            Controller::Straight => "straight",
        }
    }

    /// Builds a controller by name; baselines take their parameters from
    /// the config, `policy` needs parameters.
    pub fn from_name(
        name: &str,
        config: &Config,
        policy: Option<PolicyParameters>,
    ) -> Result<Self> {
        match name {
            "policy" => policy
                .map(|p| Controller::Policy(Box::new(p)))
                .ok_or_else(|| Error::Usage("the policy controller needs a checkpoint".into())),
            "orca" => Ok(Controller::Orca(config.orca())),
            "fmp" => Ok(Controller::Fmp(config.fmp())),
            "straight" => Ok(Controller::Straight),
            other => Err(Error::Usage(format!(
                "unknown controller {other:?} (expected one of {})",
                CONTROLLER_NAMES.join(", ")
            ))),
        }
    }

    pub fn env_config(&self, config: &Config, agents: usize) -> EnvConfig {
        match self {
            Controller::Policy(_) => config.env_config(agents, true),
            _ => config.baseline_env_config(agents),
        }
    }

    fn policy_fingerprint(&self) -> Option<String> {
        match self {
            Controller::Policy(p) => Some(p.fingerprint()),
            _ => None,
        }
    }

    /// Joint action for the environment's current state.
    pub fn act(&self, env: &mut SwarmEnv) -> Result<Vec<AgentAction>> {
        let raw = env.observe_raw();
        let cfg = *env.config();
        match self {
            Controller::Policy(p) => raw
                .iter()
                .map(|r| p.act_deterministic(&env.reduce(r)))
                .collect(),
            Controller::Orca(params) => Ok(raw
                .iter()
                .map(|r| {
                    let neighbors: Vec<RelativeAgent> =
                        r.neighbors.iter().map(RelativeAgent::from).collect();
                    let preferred = straight_line_velocity(
                        r.goal_offset(),
                        params.max_speed,
                        cfg.scenario.capture_radius,
                    );
                    let v = orca_velocity(r.velocity.truncate(), &neighbors, preferred, params);
                    lift(v, r, cfg.phys.v_max)
                })
                .collect()),
            Controller::Fmp(params) => Ok(raw
                .iter()
                .map(|r| {
                    let neighbors: Vec<RelativeAgent> =
                        r.neighbors.iter().map(RelativeAgent::from).collect();
                    lift(
                        fmp_velocity(&neighbors, r.goal_offset(), params),
                        r,
                        cfg.phys.v_max,
                    )
                })
                .collect()),
            Controller::Straight => Ok(raw
                .iter()
                .map(|r| {
                    let v = straight_line_velocity(
                        r.goal_offset(),
                        cfg.phys.v_max,
                        cfg.scenario.capture_radius,
                    );
                    lift(v, r, cfg.phys.v_max)
                })
                .collect()),
        }
    }
}

/// Horizontal command plus whatever vertical speed is left toward the
/// goal's height.
fn lift(v: Vec2, raw: &RawObservation, v_max: f64) -> AgentAction {
    let spare = (v_max * v_max - v.length_squared()).max(0.0).sqrt();
    let vz = raw.goal_z_offset.clamp(-spare, spare);
    AgentAction::velocity_only(Vec3::new(v.x, v.y, vz))
}

/// Runs one episode until the scenario ends it. `start` replaces the
/// scenario's initial state.
pub fn run_episode(
    config: &Config,
    controller: &Controller,
    seed: u64,
    start: Option<SwarmState>,
) -> Result<EpisodeTrace> {
    let started = Instant::now();
    let custom_start = start.is_some();
    let agents = start.as_ref().map_or(config.agents, |s| s.len());
    let env_config = controller.env_config(config, agents);
    let mut env = match start {
        Some(state) => SwarmEnv::with_state(env_config, state, seed)?,
        None => SwarmEnv::new(env_config, seed)?,
    };
    let header = TraceHeader {
        schema: TRACE_SCHEMA.into(),
        config: config.clone(),
        config_fingerprint: config.fingerprint(),
        seed,
        controller: controller.name().into(),
        policy_fingerprint: controller.policy_fingerprint(),
        custom_start,
        initial: env.state().clone(),
    };
    let phys = env_config.phys;
    let mut steps = Vec::new();
    loop {
        let actions: Vec<AgentAction> = controller
            .act(&mut env)?
            .into_iter()
            .map(|a| a.clipped(phys.v_max, phys.omega_max))
            .collect();
        let outcome = env.step(&actions)?;
        steps.push(TraceStep {
            step: env.state().step,
            agents: env.state().agents.clone(),
            actions,
            rewards: outcome.rewards.iter().map(|r| r.reward).collect(),
            events: outcome.events,
        });
        if outcome.status.done {
            break;
        }
    }
    Ok(EpisodeTrace {
        header,
        steps,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Seed of run `run` in a series starting at `seed`.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    seed.wrapping_add(run as u64)
}

#[derive(Debug, Clone)]
pub struct EvalRun {
    pub trace: EpisodeTrace,
    pub metrics: MetricsReport,
}

/// `runs` independent episodes with seeds `seed, seed + 1, ...`, in run
/// order.
pub fn evaluate(
    config: &Config,
    controller: &Controller,
    runs: usize,
    seed: u64,
) -> Result<Vec<EvalRun>> {
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let trace = run_episode(config, controller, run_seed(seed, r), None)?;
            let metrics = compute_metrics(&trace);
            Ok(EvalRun { trace, metrics })
        })
        .collect()
}

/// Re-simulates a trace from its header. With `config`, refuses unless it
/// matches the trace's config exactly; a policy trace needs the same
/// parameters it was recorded with.
pub fn replay(
    trace: &EpisodeTrace,
    config: Option<&Config>,
    policy: Option<&PolicyParameters>,
) -> Result<EpisodeTrace> {
    let header = &trace.header;
    let embedded = header.config.fingerprint();
    if embedded != header.config_fingerprint {
        return Err(Error::TamperedTrace {
            diff: format!(
                "stored fingerprint {}\nembedded config hashes to {embedded}",
                header.config_fingerprint
            ),
        });
    }
    if let Some(c) = config {
        if c.fingerprint() != header.config_fingerprint {
            return Err(Error::FingerprintMismatch {
                diff: header.config.diff(c).join("\n"),
            });
        }
    }
    let controller = Controller::from_name(&header.controller, &header.config, policy.cloned())?;
    if controller.policy_fingerprint() != header.policy_fingerprint {
        return Err(Error::FingerprintMismatch {
            diff: format!(
                "policy: {:?} -> {:?}",
                header.policy_fingerprint,
                controller.policy_fingerprint()
            ),
        });
    }
    let start = header.custom_start.then(|| header.initial.clone());
    run_episode(&header.config, &controller, header.seed, start)
}

/// First `(step index, agent)` where two traces' states differ in any bit;
/// `None` when they agree everywhere and have the same length.
pub fn first_divergence(a: &EpisodeTrace, b: &EpisodeTrace) -> Option<(usize, usize)> {
    let bits = |v: Vec3| [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
    let states = |t: &EpisodeTrace| {
        std::iter::once(t.header.initial.agents.clone())
            .chain(t.steps.iter().map(|s| s.agents.clone()))
            .collect::<Vec<_>>()
    };
    let (sa, sb) = (states(a), states(b));
    for (t, (x, y)) in sa.iter().zip(&sb).enumerate() {
        if x.len() != y.len() {
            return Some((t, 0));
        }
        for (i, (p, q)) in x.iter().zip(y).enumerate() {
            let same = bits(p.position) == bits(q.position)
                && bits(p.velocity) == bits(q.velocity)
                && p.yaw.to_bits() == q.yaw.to_bits()
                && p.yaw_rate.to_bits() == q.yaw_rate.to_bits()
                && bits(p.goal) == bits(q.goal);
            if !same {
                return Some((t, i));
            }
        }
    }
    (sa.len() != sb.len()).then(|| (sa.len().min(sb.len()), 0))
}
