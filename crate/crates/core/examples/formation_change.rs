//! Circle formation change: every controller on the same seeds.
//!
//! ```text
//! cargo run --release --example formation_change -- [agents] [checkpoint.json]
//! ```

use std::path::PathBuf;

use knn_swarm::checkpoint::Checkpoint;
use knn_swarm::config::Config;
use knn_swarm::eval::{self, Controller};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let agents = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let config = Config {
        agents,
        ..Config::default()
    };
    let mut controllers = vec![
        Controller::Orca(config.orca()),
        Controller::Fmp(config.fmp()),
        Controller::Straight,
    ];
    if let Some(path) = args.next() {
        let ckpt = Checkpoint::load(&PathBuf::from(path))?;
        controllers.insert(0, Controller::Policy(Box::new(ckpt.policy)));
    }
    let mut summaries = Vec::new();
    for c in &controllers {
        let runs = eval::evaluate(&config, c, 5, 0)?;
        let reports: Vec<_> = runs.into_iter().map(|r| r.metrics).collect();
        summaries.push(eval::aggregate(&reports));
    }
    print!("{}", eval::format_table(&summaries));
    Ok(())
}
