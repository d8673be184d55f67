//! ORCA on its own: one half-plane LP by hand, then two agents swapping
//! places through each other.

use knn_swarm::baselines::{orca_half_planes, orca_velocity, OrcaParams, RelativeAgent};
use knn_swarm::config::Config;
use knn_swarm::eval::{self, Controller};
use knn_swarm::Vec2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = OrcaParams::default();
    // a neighbour 6 m ahead flying straight at us
    let neighbour = RelativeAgent {
        position: Vec2::new(6.0, 0.0),
        velocity: Vec2::new(-30.0, 0.0),
    };
    let own = Vec2::new(30.0, 0.0);
    for plane in orca_half_planes(own, &[neighbour], &params) {
        println!(
            "half-plane through {:?} along {:?}",
            plane.point, plane.direction
        );
    }
    let v = orca_velocity(own, &[neighbour], own, &params);
    println!("preferred {own:?} -> admissible {v:?}");

    let config = Config {
        agents: 2,
        ..Config::default()
    };
    let trace = eval::run_episode(&config, &Controller::Orca(config.orca()), 0, None)?;
    let m = eval::compute_metrics(&trace);
    println!(
        "antipodal swap: min distance {:.2} m, extra time {:.2} s, {} steps",
        m.min_distance.unwrap_or(f64::NAN),
        m.extra_time_to_goal.unwrap_or(f64::NAN),
        trace.steps.len()
    );
    Ok(())
}
