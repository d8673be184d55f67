//! Two FMP agents sent to the same package stop short of it: attraction and
//! repulsion cancel outside the capture radius.

use knn_swarm::config::Config;
use knn_swarm::dynamics::{AgentState, SwarmState};
use knn_swarm::eval::{self, Controller};
use knn_swarm::scenario::ScenarioKind;
use knn_swarm::Vec3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = Config {
        agents: 2,
        scenario: ScenarioKind::PackageDelivery,
        ..Config::default()
    };
    let package = Vec3::new(0.0, 70.0, 0.0);
    let start = SwarmState::new(vec![
        AgentState::at_rest(Vec3::new(-70.0, 0.0, 0.0), package),
        AgentState::at_rest(Vec3::new(70.0, 0.0, 0.0), package),
    ]);
    let trace = eval::run_episode(&config, &Controller::Fmp(config.fmp()), 0, Some(start))?;
    for step in trace.steps.iter().step_by(250) {
        let t = step.step as f64 * config.dt;
        let line: Vec<String> = step
            .agents
            .iter()
            .map(|a| {
                format!(
                    "({:6.2}, {:6.2}) {:5.2} m/s, {:5.2} m to go",
                    a.position.x,
                    a.position.y,
                    a.velocity.length(),
                    (a.goal - a.position).length()
                )
            })
            .collect();
        println!("t={t:5.1}s  {}", line.join("  |  "));
    }
    let collected: usize = trace.steps.iter().map(|s| s.events.len()).sum();
    println!("packages collected: {collected}");
    Ok(())
}
