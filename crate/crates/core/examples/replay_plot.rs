//! Records an ORCA episode to JSON lines, replays it bit for bit and writes
//! the CSV series for plotting.
//!
//! ```text
//! cargo run --release --example replay_plot -- [out_dir]
//! ```

use std::path::PathBuf;

use knn_swarm::config::Config;
use knn_swarm::eval::{self, Controller, EpisodeTrace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "runs/replay_plot".into()),
    );
    std::fs::create_dir_all(&out)?;
    let config = Config {
        agents: 8,
        ..Config::default()
    };
    let trace = eval::run_episode(&config, &Controller::Orca(config.orca()), 7, None)?;
    let path = out.join("trace.jsonl");
    trace.save(&path)?;

    let loaded = EpisodeTrace::load(&path)?;
    let replayed = eval::replay(&loaded, Some(&config), None)?;
    match eval::first_divergence(&loaded, &replayed) {
        None => println!("replay of {} steps is identical", replayed.steps.len()),
        Some((step, agent)) => println!("replay diverges at step {step}, agent {agent}"),
    }
    for p in eval::write_plot_data(&loaded, &out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
