//! What one agent sees: the noisy raw observation of a random swarm and its
//! k-nearest-neighbour reduction.

use knn_swarm::dynamics::{AgentState, Dimension, SwarmState};
use knn_swarm::sensing::{reduce_k_nearest, sense, NoiseParams};
use knn_swarm::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let agents = (0..12)
        .map(|_| AgentState {
            velocity: Vec3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                0.0,
            ),
            ..AgentState::at_rest(
                Vec3::new(
                    rng.random_range(-15.0..15.0),
                    rng.random_range(-15.0..15.0),
                    0.0,
                ),
                Vec3::new(60.0, 20.0, 0.0),
            )
        })
        .collect();
    let world = SwarmState::new(agents);
    let range = 10.0;
    let raw = sense(
        &world,
        0,
        &NoiseParams::default(),
        range,
        Dimension::Two,
        &mut rng,
    );
    println!(
        "agent 0 at {:?}, goal {:.2} m away at {:.3} rad, {} neighbours in range",
        raw.position,
        raw.goal_distance,
        raw.goal_bearing,
        raw.neighbors.len()
    );
    for n in &raw.neighbors {
        println!(
            "  {:6.3} m at {:6.3} rad, relative velocity {:?}",
            n.distance, n.bearing, n.relative_velocity
        );
    }
    for k in [1, 3] {
        let obs = reduce_k_nearest(&raw, k, range, Dimension::Two);
        println!("k={k}: {:.3?} present {:?}", obs.values, obs.present);
    }
}
