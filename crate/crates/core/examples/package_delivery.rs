//! Package delivery on the circle: packages collected per agent in 100 s.
//!
//! ```text
//! cargo run --release --example package_delivery -- [agents] [checkpoint.json]
//! ```

use std::path::PathBuf;

use knn_swarm::checkpoint::Checkpoint;
use knn_swarm::config::Config;
use knn_swarm::eval::{self, Controller};
use knn_swarm::scenario::ScenarioKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let agents = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8);
    let config = Config {
        agents,
        scenario: ScenarioKind::PackageDelivery,
        horizon: 5000,
        ..Config::default()
    };
    let mut controllers = vec![
        Controller::Orca(config.orca()),
        Controller::Fmp(config.fmp()),
    ];
    if let Some(path) = args.next() {
        controllers.insert(
            0,
            Controller::Policy(Box::new(Checkpoint::load(&PathBuf::from(path))?.policy)),
        );
    }
    for c in &controllers {
        let runs = eval::evaluate(&config, c, 4, 0)?;
        let per_run: Vec<String> = runs
            .iter()
            .map(|r| format!("{:.2}", r.metrics.packages_per_agent.unwrap_or(0.0)))
            .collect();
        let mean = eval::aggregate(&runs.iter().map(|r| r.metrics.clone()).collect::<Vec<_>>());
        println!(
            "{:<9} {:>6.2} packages/agent  (runs: {}; collisions {})",
            c.name(),
            mean.packages_per_agent.unwrap_or(0.0),
            per_run.join(" "),
            mean.total_collisions
        );
    }
    Ok(())
}
