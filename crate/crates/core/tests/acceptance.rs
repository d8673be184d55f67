//! End-to-end acceptance suite, one line per criterion.
//!
//! ```text
//! cargo test --release --test acceptance
//! KNN_SWARM_ACCEPTANCE=1,5,12 cargo test --release --test acceptance
//! ```
//!
//! Criteria 6, 9 and 10 share one policy trained over the full 4 -> 40 agent
//! curriculum (a few minutes on one core). `KNN_SWARM_ACCEPTANCE_CHECKPOINT`
//! points at a checkpoint of that same training config to skip the run.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use knn_swarm::baselines::{orca_half_planes, orca_velocity, OrcaParams, RelativeAgent};
use knn_swarm::checkpoint::Checkpoint;
use knn_swarm::config::Config;
use knn_swarm::dynamics::{
    rotation_matrix, step_agent, AgentAction, AgentState, Dimension, PhysParams, SwarmState,
};
use knn_swarm::eval::{self, Controller, EpisodeTrace, MetricsSummary};
use knn_swarm::policy::PolicyParameters;
use knn_swarm::scenario::{reward, GoalEvent, ScenarioConfig, ScenarioKind};
use knn_swarm::sensing::{reduce_k_nearest, sense, NoiseParams};
use knn_swarm::trainer::{
    compute_advantages, ppo_loss, ppo_loss_and_grad, PpoConfig, Segment, TransitionBatch,
};
use knn_swarm::{Vec2, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

/// The default config: 3M agent-steps over the full curriculum.
fn headline_config() -> Config {
    Config::default()
}

fn trained_policy() -> &'static PolicyParameters {
    static POLICY: OnceLock<PolicyParameters> = OnceLock::new();
    POLICY.get_or_init(|| {
        let config = headline_config();
        if let Ok(path) = std::env::var("KNN_SWARM_ACCEPTANCE_CHECKPOINT") {
            let ckpt = Checkpoint::load(&PathBuf::from(path)).expect("checkpoint");
            ckpt.verify_config(&config)
                .expect("checkpoint of a different training config");
            return ckpt.policy;
        }
        let started = Instant::now();
        let mut trainer = knn_swarm::trainer::Trainer::new(config).expect("trainer");
        let report = trainer.train(None).expect("training");
        let last = report.logs.last().expect("at least one iteration");
        println!(
            "    trained {} agent-steps up to N={} in {:.0} s",
            last.total_steps,
            last.agents,
            started.elapsed().as_secs_f64()
        );
        trainer.policy().clone()
    })
}

fn summary(
    config: &Config,
    controller: &Controller,
    runs: usize,
    seed: u64,
) -> Result<(MetricsSummary, Vec<EpisodeTrace>), String> {
    let runs = eval::evaluate(config, controller, runs, seed).map_err(|e| e.to_string())?;
    let reports: Vec<_> = runs.iter().map(|r| r.metrics.clone()).collect();
    Ok((
        eval::aggregate(&reports),
        runs.into_iter().map(|r| r.trace).collect(),
    ))
}

fn dynamics_oracle() -> Outcome {
    let params = PhysParams::default();
    let mut agent = AgentState {
        velocity: Vec3::new(-4.0, 7.5, 0.0),
        ..AgentState::at_rest(Vec3::ZERO, Vec3::ZERO)
    };
    let target = Vec3::new(12.0, -20.0, 0.0);
    let v0 = agent.velocity;
    let mut worst: f64 = 0.0;
    for t in 1..=1000 {
        agent = step_agent(&agent, &AgentAction::velocity_only(target), &params);
        let ex = common::lag_closed_form(v0.x, target.x, params.c_v, params.dt, t);
        let ey = common::lag_closed_form(v0.y, target.y, params.c_v, params.dt, t);
        worst = worst
            .max((agent.velocity.x - ex).abs())
            .max((agent.velocity.y - ey).abs());
    }
    ensure!(worst <= 1e-9, "lag error {worst:e}");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ortho: f64 = 0.0;
    for _ in 0..10_000 {
        let r = rotation_matrix(rng.random_range(-50.0..50.0));
        let rtr = r.transpose() * r;
        ortho = ortho
            .max((rtr.x_axis.x - 1.0).abs())
            .max((rtr.y_axis.y - 1.0).abs())
            .max(rtr.x_axis.y.abs())
            .max(rtr.y_axis.x.abs());
    }
    ensure!(ortho <= 1e-12, "R^T R deviates by {ortho:e}");
    Ok(format!(
        "lag error {worst:.1e} over 1000 steps, R^T R error {ortho:.1e}"
    ))
}

fn observation_statistics() -> Outcome {
    let noise = NoiseParams::default();
    let world = SwarmState::new(vec![
        AgentState {
            velocity: Vec3::new(3.0, -2.0, 0.0),
            ..AgentState::at_rest(Vec3::new(1.0, 2.0, 0.0), Vec3::new(-40.0, 25.0, 0.0))
        },
        AgentState {
            velocity: Vec3::new(-1.0, 4.0, 0.0),
            ..AgentState::at_rest(Vec3::new(5.0, 5.0, 0.0), Vec3::ZERO)
        },
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws: Vec<_> = (0..100_000)
        .map(|_| sense(&world, 0, &noise, 10.0, Dimension::Two, &mut rng))
        .collect();
    let std = |xs: Vec<f64>| {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let channels = [
        (
            "position",
            std(draws.iter().map(|o| o.position.x).collect()),
            noise.sigma_p,
        ),
        (
            "velocity",
            std(draws.iter().map(|o| o.velocity.x).collect()),
            noise.sigma_v,
        ),
        (
            "goal distance",
            std(draws.iter().map(|o| o.goal_distance).collect()),
            noise.sigma_d,
        ),
        (
            "goal bearing",
            std(draws.iter().map(|o| o.goal_bearing).collect()),
            noise.sigma_phi,
        ),
        (
            "distance",
            std(draws.iter().map(|o| o.neighbors[0].distance).collect()),
            noise.sigma_d,
        ),
        (
            "bearing",
            std(draws.iter().map(|o| o.neighbors[0].bearing).collect()),
            noise.sigma_phi,
        ),
        (
            "relative velocity",
            std(draws
                .iter()
                .map(|o| o.neighbors[0].relative_velocity.y)
                .collect()),
            noise.sigma_v,
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, s, sigma) in channels {
        let rel = (s / sigma - 1.0).abs();
        ensure!(rel <= 0.02, "{name}: std {s:e} vs {sigma:e}");
        worst = worst.max(rel);
    }
    let exact = sense(
        &world,
        0,
        &NoiseParams::NONE,
        10.0,
        Dimension::Two,
        &mut rng,
    );
    let me = world.agents[0];
    let g = me.goal - me.position;
    ensure!(
        exact.position == me.position
            && exact.velocity == me.velocity
            && exact.goal_distance == (g.x * g.x + g.y * g.y).sqrt()
            && exact.neighbors[0].relative_velocity == world.agents[1].velocity - me.velocity,
        "noiseless observation is not exact"
    );
    Ok(format!(
        "7 channels, worst relative std error {:.2}%; noiseless exact",
        100.0 * worst
    ))
}

fn knn_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..1000 {
        let n = rng.random_range(1..=50);
        let k = rng.random_range(1..=5);
        let range = rng.random_range(5.0..40.0);
        let world = common::random_swarm(&mut rng, n, 30.0);
        let agent = rng.random_range(0..n);
        let raw = sense(
            &world,
            agent,
            &NoiseParams::NONE,
            range,
            Dimension::Two,
            &mut rng,
        );
        let reduced = reduce_k_nearest(&raw, k, range, Dimension::Two);
        let oracle = common::full_sort_neighbors(&world, agent, range);
        let me = world.agents[agent];
        for slot in 0..k {
            let base = 6 + 4 * slot;
            let got = &reduced.values[base..base + 4];
            let expected = match oracle.get(slot) {
                Some(&(d, j)) => {
                    let off = world.agents[j].position - me.position;
                    let rv = world.agents[j].velocity - me.velocity;
                    [d, off.y.atan2(off.x), rv.x, rv.y]
                }
                None => [range, 0.0, 0.0, 0.0],
            };
            ensure!(
                got.iter()
                    .zip(&expected)
                    .all(|(a, b)| (a - b).abs() <= 1e-12),
                "case {case}, slot {slot}: {got:?} vs {expected:?}"
            );
        }
    }
    Ok("1000 configurations (N <= 50, k <= 5) equal to the full sort".into())
}

fn reward_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for case in 0..1000 {
        let n = rng.random_range(1..=30);
        let extent = rng.random_range(5.0..80.0);
        let state = common::random_swarm(&mut rng, n, extent);
        let config = ScenarioConfig {
            agents: n,
            ..ScenarioConfig::default()
        };
        let ours = reward(&state, &config);
        let oracle =
            common::brute_force_reward(&state, config.c_p, config.c_c, config.avoidance_radius);
        for (i, (r, (expected, count))) in ours.iter().zip(oracle).enumerate() {
            ensure!(
                r.reward == expected && r.proximity_count == count,
                "case {case}, agent {i}: {} vs {expected}",
                r.reward
            );
        }
    }
    Ok("1000 random states, exact match".into())
}

fn orca_oracle() -> Outcome {
    let params = OrcaParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let random_vec = |rng: &mut ChaCha8Rng, max: f64| {
        Vec2::from_angle(rng.random_range(0.0..std::f64::consts::TAU)) * rng.random_range(0.0..max)
    };
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 500 {
        let own = random_vec(&mut rng, params.max_speed);
        let count = rng.random_range(1..=3);
        let neighbors: Vec<RelativeAgent> = (0..count)
            .map(|_| RelativeAgent {
                position: Vec2::from_angle(rng.random_range(0.0..std::f64::consts::TAU))
                    * rng.random_range(2.0..20.0),
                velocity: random_vec(&mut rng, 40.0),
            })
            .collect();
        let preferred = random_vec(&mut rng, params.max_speed);
        let lines = orca_half_planes(own, &neighbors, &params);
        let Some(oracle) = common::grid_search_lp(&lines, params.max_speed, preferred) else {
            continue;
        };
        let ours = orca_velocity(own, &neighbors, preferred, &params);
        let err = (ours - oracle).length();
        ensure!(err <= 1e-3, "geometry {checked}: {ours:?} vs {oracle:?}");
        worst = worst.max(err);
        checked += 1;
    }
    let config = Config {
        agents: 2,
        ..Config::default()
    };
    let mut closest = f64::INFINITY;
    for seed in 0..3 {
        let trace = eval::run_episode(&config, &Controller::Orca(config.orca()), seed, None)
            .map_err(|e| e.to_string())?;
        closest = closest.min(eval::min_interagent_distance(&trace).unwrap_or(f64::INFINITY));
    }
    ensure!(closest > 1.5, "antipodal swap came within {closest:.3} m");
    Ok(format!(
        "500 geometries, worst {worst:.1e}; antipodal swap min distance {closest:.2} m"
    ))
}

/// Two agents on opposite sides of the circle with the same package.
fn overlapping_goals() -> SwarmState {
    let goal = Vec3::new(0.0, 70.0, 0.0);
    SwarmState::new(vec![
        AgentState::at_rest(Vec3::new(-70.0, 0.0, 0.0), goal),
        AgentState::at_rest(Vec3::new(70.0, 0.0, 0.0), goal),
    ])
}

fn fmp_freeze() -> Outcome {
    let config = Config {
        agents: 2,
        scenario: ScenarioKind::PackageDelivery,
        ..Config::default()
    };
    let fmp = eval::run_episode(
        &config,
        &Controller::Fmp(config.fmp()),
        0,
        Some(overlapping_goals()),
    )
    .map_err(|e| e.to_string())?;
    let slow = 0.01 * config.v_max;
    let mut run = 0usize;
    let mut longest = 0usize;
    for step in &fmp.steps {
        if step.agents.iter().all(|a| a.velocity.length() < slow) {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    let frozen_s = longest as f64 * config.dt;
    let fmp_pickups = fmp.steps.iter().map(|s| s.events.len()).sum::<usize>();
    ensure!(
        frozen_s >= 5.0,
        "FMP agents below {slow} m/s for only {frozen_s:.2} s"
    );

    let policy = Controller::Policy(Box::new(trained_policy().clone()));
    let learned = eval::run_episode(&config, &policy, 0, Some(overlapping_goals()))
        .map_err(|e| e.to_string())?;
    let pickup = learned
        .steps
        .iter()
        .flat_map(|s| &s.events)
        .find_map(|e| match e {
            GoalEvent::PackageCollected { agent, step } => Some((*agent, *step)),
            _ => None,
        });
    let Some((agent, step)) = pickup else {
        return Err(format!(
            "FMP frozen for {frozen_s:.1} s, but the policy never collected the shared package in {} s",
            learned.steps.len() as f64 * config.dt
        ));
    };
    Ok(format!(
        "FMP frozen for {frozen_s:.1} s ({fmp_pickups} pickups); policy agent {agent} collects at t = {:.2} s",
        step as f64 * config.dt
    ))
}

fn ppo_correctness() -> Outcome {
    // GAE against the forward definition
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let len = 6;
        let rewards: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let bootstrap = rng.random_range(-10.0..10.0);
        let (gamma, lambda) = (rng.random_range(0.5..0.999), rng.random_range(0.0..=1.0));
        let mut batch = TransitionBatch {
            rewards: rewards.clone(),
            values: values.clone(),
            dones: vec![false; len],
            segments: vec![Segment {
                start: 0,
                end: len,
                bootstrap,
            }],
            ..TransitionBatch::default()
        };
        compute_advantages(&mut batch, gamma, lambda);
        let oracle = common::gae_forward(&rewards, &values, bootstrap, gamma, lambda);
        ensure!(
            batch
                .advantages
                .iter()
                .zip(&oracle)
                .all(|(a, b)| (a - b).abs() <= 1e-10),
            "GAE {:?} vs {oracle:?}",
            batch.advantages
        );
    }

    // surrogate scalar by hand
    let cfg = PpoConfig::default();
    let old = common::policy(3);
    let new = common::perturbed(&old, 0.05, 4);
    let batch = common::synthetic_batch(&old, 3, 9);
    let parts = ppo_loss(&new, &batch, &[0, 1, 2], &cfg);
    let old_std: Vec<f64> = old.log_std().iter().map(|l| l.exp()).collect();
    let mut surrogate = 0.0;
    for i in 0..3 {
        let obs = &batch.observations[i * old.shape.input..(i + 1) * old.shape.input];
        let out = new
            .forward(&common::obs_vector(obs))
            .map_err(|e| e.to_string())?;
        let raw = &batch.raw_actions[i * 3..(i + 1) * 3];
        let new_lp = common::normal_log_density(raw, &out.mean, &out.std);
        let old_lp =
            common::normal_log_density(raw, &batch.old_means[i * 3..(i + 1) * 3], &old_std);
        surrogate +=
            common::clipped_term(new_lp, old_lp, batch.normalized_advantages[i], cfg.clip) / 3.0;
    }
    ensure!(
        (parts.surrogate - surrogate).abs() <= 1e-9,
        "surrogate {} vs {surrogate}",
        parts.surrogate
    );

    // gradient against central differences
    let old = common::policy(11);
    let new = common::perturbed(&old, 0.02, 12);
    let batch = common::synthetic_batch(&old, 40, 13);
    let indices: Vec<usize> = (0..40).collect();
    let mut grad = vec![0.0; new.num_params()];
    ppo_loss_and_grad(&new, &batch, &indices, &cfg, &mut grad);
    let h = 1e-6;
    let trials = 1000;
    let mut agree = 0;
    for _ in 0..trials {
        let k = rng.random_range(0..new.num_params());
        let mut plus = new.clone();
        plus.params[k] += h;
        let mut minus = new.clone();
        minus.params[k] -= h;
        let fd = (ppo_loss(&plus, &batch, &indices, &cfg).total
            - ppo_loss(&minus, &batch, &indices, &cfg).total)
            / (2.0 * h);
        let err = (fd - grad[k]).abs();
        if err <= 1e-5 * fd.abs().max(grad[k].abs()) || err <= 1e-9 {
            agree += 1;
        }
    }
    ensure!(
        agree * 100 >= trials * 99,
        "{agree}/{trials} gradient entries agree"
    );
    Ok(format!(
        "GAE 200 cases, surrogate within 1e-9, gradient {agree}/{trials} entries agree"
    ))
}

fn training_smoke() -> Outcome {
    let mut lines = Vec::new();
    let mut improved = 0;
    for seed in 0..3 {
        let config = Config {
            seed,
            agents: 2,
            curriculum_start: 2,
            curriculum_end: 2,
            total_steps: 200_000,
            ..Config::default()
        };
        let started = Instant::now();
        let mut trainer = knn_swarm::trainer::Trainer::new(config).map_err(|e| e.to_string())?;
        let report = trainer.train(None).map_err(|e| e.to_string())?;
        let returns: Vec<f64> = report.episodes.iter().map(|e| e.agent_return).collect();
        ensure!(
            returns.len() >= 10,
            "seed {seed}: only {} episodes",
            returns.len()
        );
        let decile = returns.len() / 10;
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let first = mean(&returns[..decile]);
        let last = mean(&returns[returns.len() - decile..]);
        if last > first {
            improved += 1;
        }
        lines.push(format!(
            "seed {seed}: {first:.0} -> {last:.0} ({} episodes, {:.0} s)",
            returns.len(),
            started.elapsed().as_secs_f64()
        ));
    }
    ensure!(
        improved >= 2,
        "only {improved}/3 seeds improved: {}",
        lines.join("; ")
    );
    Ok(format!("{improved}/3 seeds improved; {}", lines.join("; ")))
}

fn headline() -> Outcome {
    let config = Config {
        agents: 10,
        ..headline_config()
    };
    let policy = Controller::Policy(Box::new(trained_policy().clone()));
    let (s, _) = summary(&config, &policy, 5, 1000)?;
    let extra = s.extra_time_to_goal.unwrap_or(f64::INFINITY);
    let min = s.min_distance.unwrap_or(0.0);
    let text = format!(
        "N=10 over 5 runs: collisions {}, deadlocks {}, extra time {extra:.2} s, min distance {min:.2} m (worst run {:.2} m), \
         distance ratio {:.3}",
        s.total_collisions,
        s.deadlocks,
        s.worst_min_distance.unwrap_or(0.0),
        s.distance_ratio.unwrap_or(f64::NAN)
    );
    ensure!(
        s.total_collisions == 0 && s.deadlocks == 0 && extra <= 15.0 && min >= 1.5,
        "{text}"
    );
    Ok(text)
}

fn package_delivery() -> Outcome {
    let config = Config {
        agents: 8,
        scenario: ScenarioKind::PackageDelivery,
        horizon: 5000,
        ..headline_config()
    };
    let mut packages = Vec::new();
    for controller in [
        Controller::Policy(Box::new(trained_policy().clone())),
        Controller::Orca(config.orca()),
        Controller::Fmp(config.fmp()),
    ] {
        let (s, _) = summary(&config, &controller, 4, 0)?;
        packages.push((controller.name(), s.packages_per_agent.unwrap_or(0.0)));
    }
    let text = packages
        .iter()
        .map(|(name, p)| format!("{name} {p:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure!(
        packages[0].1 > packages[1].1 && packages[0].1 > packages[2].1,
        "packages per agent at N=8 over 4 x 100 s: {text}"
    );
    Ok(format!("packages per agent at N=8 over 4 x 100 s: {text}"))
}

fn determinism() -> Outcome {
    let config = Config {
        agents: 6,
        horizon: 500,
        ..Config::default()
    };
    let policy = trained_policy().clone();
    for controller in [
        Controller::Policy(Box::new(policy.clone())),
        Controller::Orca(config.orca()),
        Controller::Fmp(config.fmp()),
    ] {
        let trace = eval::run_episode(&config, &controller, 42, None).map_err(|e| e.to_string())?;
        let loaded = EpisodeTrace::from_jsonl(&trace.to_jsonl()).map_err(|e| e.to_string())?;
        let p = matches!(controller, Controller::Policy(_)).then_some(&policy);
        let again = eval::replay(&loaded, Some(&config), p).map_err(|e| e.to_string())?;
        ensure!(
            again.header == trace.header && again.steps == trace.steps,
            "{} replay diverges at {:?}",
            controller.name(),
            eval::first_divergence(&trace, &again)
        );
    }

    let small = Config {
        seed: 9,
        horizon: 200,
        train_batch: 1_200,
        minibatch: 300,
        sgd_iterations: 2,
        total_steps: 3_600,
        num_envs: 2,
        curriculum_start: 2,
        curriculum_end: 4,
        ..Config::default()
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("mid.json");
    let mut straight =
        knn_swarm::trainer::Trainer::new(small.clone()).map_err(|e| e.to_string())?;
    straight.run_iteration().map_err(|e| e.to_string())?;
    straight
        .checkpoint()
        .save(&path)
        .map_err(|e| e.to_string())?;
    let (a, _) = straight.run_iteration().map_err(|e| e.to_string())?;
    let ckpt = Checkpoint::load(&path).map_err(|e| e.to_string())?;
    let mut resumed =
        knn_swarm::trainer::Trainer::resume(small, ckpt).map_err(|e| e.to_string())?;
    let (b, _) = resumed.run_iteration().map_err(|e| e.to_string())?;
    ensure!(
        straight.policy().params == resumed.policy().params
            && a.reward_mean.to_bits() == b.reward_mean.to_bits(),
        "resumed iteration differs"
    );
    Ok(
        "policy, ORCA and FMP traces replay bit-identically; resume reproduces the next iteration"
            .into(),
    )
}

fn inference_budget() -> Outcome {
    let policy = trained_policy();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let inputs: Vec<_> = (0..1000)
        .map(|_| common::obs_vector(&common::observation(&mut rng, policy.shape.input)))
        .collect();
    let mut sink = 0.0;
    let passes = 20_000;
    let started = Instant::now();
    for i in 0..passes {
        sink += policy
            .forward(&inputs[i % inputs.len()])
            .map_err(|e| e.to_string())?
            .mean[0];
    }
    let per_pass = started.elapsed().as_secs_f64() / passes as f64;
    std::hint::black_box(sink);
    ensure!(per_pass < 1e-3, "{:.1} us per forward pass", per_pass * 1e6);
    Ok(format!("{:.1} us per forward pass", per_pass * 1e6))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "dynamics oracle equivalence", dynamics_oracle),
        (2, "observation statistics", observation_statistics),
        (3, "k-NN reduction", knn_reduction),
        (4, "reward oracle equivalence", reward_oracle),
        (5, "ORCA LP vs grid search", orca_oracle),
        (6, "FMP freezing vs policy pickup", fmp_freeze),
        (7, "PPO correctness", ppo_correctness),
        (8, "training smoke test", training_smoke),
        (9, "N=10 formation change after the curriculum", headline),
        (10, "package delivery vs baselines", package_delivery),
        (11, "determinism", determinism),
        (12, "inference budget", inference_budget),
    ];
    let selected: Option<Vec<u32>> = std::env::var("KNN_SWARM_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(&id)) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                println!("FAIL {id:>2} {name}: {detail} [{secs:.1} s]");
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
