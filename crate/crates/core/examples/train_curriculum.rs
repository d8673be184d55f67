//! Trains the shared policy and evaluates the final checkpoint at N = 10.
//!
//! ```text
//! cargo run --release --example train_curriculum -- [config.toml] [out_dir]
//! ```
//!
//! Without a config this runs a short 4-agent run so it finishes in about a
//! minute; pass a config (see `knn-swarm init-config`) for the full
//! 4 -> 40 agent curriculum.

use std::path::PathBuf;

use knn_swarm::config::Config;
use knn_swarm::eval::{self, Controller};
use knn_swarm::trainer::Trainer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let config = match args.next() {
        Some(path) => Config::load(&PathBuf::from(path))?,
        None => Config {
            total_steps: 100_000,
            train_batch: 10_000,
            minibatch: 1_000,
            sgd_iterations: 10,
            curriculum_start: 4,
            curriculum_end: 4,
            ..Config::default()
        },
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/example".into()));

    let mut trainer = Trainer::new(config.clone())?;
    let report = trainer.train(Some(&out))?;
    for log in &report.logs {
        println!(
            "iter {:>3}  steps {:>8}  N {:>2}  reward/step {:>8.3}  episode return {:>10}  kl {:.4}",
            log.iteration,
            log.total_steps,
            log.agents,
            log.reward_mean,
            log.episode_reward_mean.map_or("-".into(), |r| format!("{r:.1}")),
            log.kl
        );
    }

    let eval_config = Config {
        agents: 10,
        ..config
    };
    let policy = Controller::Policy(Box::new(trainer.policy().clone()));
    let runs = eval::evaluate(&eval_config, &policy, 5, 1000)?;
    let reports: Vec<_> = runs.into_iter().map(|r| r.metrics).collect();
    print!("{}", eval::format_table(&[eval::aggregate(&reports)]));
    Ok(())
}
