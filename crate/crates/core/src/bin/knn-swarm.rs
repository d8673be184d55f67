use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use knn_swarm::checkpoint::Checkpoint;
use knn_swarm::config::Config;
use knn_swarm::eval::{self, Controller, EpisodeTrace, MetricsSummary};
use knn_swarm::trainer::Trainer;

#[derive(Parser)]
#[command(version, about = "Drone-swarm collision avoidance workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults apply to missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> anyhow::Result<Config> {
        let mut config = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            config.seed = s;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the shared policy with the curriculum
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from a checkpoint written by an earlier run
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run seeded episodes with one controller and report metrics
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// policy | orca | fmp | straight
        #[arg(long, default_value = "policy")]
        controller: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
    /// Evaluate several controllers on the same seeds
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated controller names
        #[arg(long, default_value = "policy,orca,fmp,straight")]
        controller: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
    /// Re-simulate a trace and check it reproduces bit for bit
    Replay {
        trace: PathBuf,
        /// Refuse unless the trace was recorded with this config
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Write the re-simulated trace here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write CSV series for plotting a trace
    PlotData {
        trace: PathBuf,
        #[arg(long, default_value = "plot")]
        out: PathBuf,
    },
    /// Write the default config with unit comments
    InitConfig {
        #[arg(long, default_value = "config.toml")]
        out: PathBuf,
    },
}

fn load_policy(
    checkpoint: Option<&Path>,
) -> anyhow::Result<Option<knn_swarm::policy::PolicyParameters>> {
    checkpoint
        .map(|p| Checkpoint::load(p).map(|c| c.policy))
        .transpose()
        .context("loading checkpoint")
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)
        .with_context(|| path.display().to_string())
}

fn evaluate_one(
    config: &Config,
    controller: &Controller,
    runs: usize,
    out: Option<&Path>,
) -> anyhow::Result<MetricsSummary> {
    let results = eval::evaluate(config, controller, runs, config.seed)?;
    let reports: Vec<_> = results.iter().map(|r| r.metrics.clone()).collect();
    if let Some(dir) = out {
        let dir = dir.join(controller.name());
        fs::create_dir_all(&dir)?;
        for (i, r) in results.iter().enumerate() {
            r.trace.save(&dir.join(format!("trace_{i:02}.jsonl")))?;
        }
        write_json(&dir.join("metrics.json"), &reports)?;
    }
    Ok(eval::aggregate(&reports))
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Train { common, resume } => {
            let config = common.load()?;
            let mut trainer = match resume {
                Some(p) => Trainer::resume(config, Checkpoint::load(&p)?)?,
                None => Trainer::new(config)?,
            };
            let out = common.out.unwrap_or_else(|| PathBuf::from("runs/train"));
            fs::create_dir_all(&out)?;
            trainer.config().save(&out.join("config.toml"))?;
            let report = trainer.train(Some(&out))?;
            if let Some(last) = report.checkpoints.last() {
                println!("final checkpoint: {}", last.display());
            }
        }
        Command::Evaluate {
            common,
            controller,
            checkpoint,
            runs,
        } => {
            let config = common.load()?;
            let controller =
                Controller::from_name(&controller, &config, load_policy(checkpoint.as_deref())?)?;
            let summary = evaluate_one(&config, &controller, runs, common.out.as_deref())?;
            print!("{}", eval::format_table(std::slice::from_ref(&summary)));
        }
        Command::Compare {
            common,
            controller,
            checkpoint,
            runs,
        } => {
            let config = common.load()?;
            let policy = load_policy(checkpoint.as_deref())?;
            let mut summaries = Vec::new();
            for name in controller
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
            {
                if name == "policy" && policy.is_none() {
                    log::warn!("skipping policy: no --checkpoint given");
                    continue;
                }
                let c = Controller::from_name(name, &config, policy.clone())?;
                summaries.push(evaluate_one(&config, &c, runs, common.out.as_deref())?);
            }
            if let Some(dir) = &common.out {
                write_json(&dir.join("compare.json"), &summaries)?;
            }
            print!("{}", eval::format_table(&summaries));
        }
        Command::Replay {
            trace,
            config,
            checkpoint,
            out,
        } => {
            let recorded = EpisodeTrace::load(&trace)?;
            let config = config.as_deref().map(Config::load).transpose()?;
            let policy = load_policy(checkpoint.as_deref())?;
            let replayed = eval::replay(&recorded, config.as_ref(), policy.as_ref())?;
            if let Some(p) = out {
                replayed.save(&p)?;
            }
            match eval::first_divergence(&recorded, &replayed) {
                None => println!(
                    "identical: {} steps, {} agents",
                    replayed.steps.len(),
                    replayed.num_agents()
                ),
                Some((step, agent)) => bail!("replay diverges at step {step}, agent {agent}"),
            }
        }
        Command::PlotData { trace, out } => {
            let t = EpisodeTrace::load(&trace)?;
            for p in eval::write_plot_data(&t, &out)? {
                println!("{}", p.display());
            }
        }
        Command::InitConfig { out } => {
            Config::default().save(&out)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}
