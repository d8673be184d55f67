mod common;

use knn_swarm::dynamics::{AgentState, Dimension, SwarmState};
use knn_swarm::sensing::{reduce_k_nearest, sense, NoiseParams, RawObservation};
use knn_swarm::Vec3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair() -> SwarmState {
    SwarmState::new(vec![
        AgentState {
            velocity: Vec3::new(3.0, -2.0, 0.0),
            ..AgentState::at_rest(Vec3::new(1.0, 2.0, 0.0), Vec3::new(-40.0, 25.0, 0.0))
        },
        AgentState {
            velocity: Vec3::new(-1.0, 4.0, 0.0),
            ..AgentState::at_rest(Vec3::new(5.0, 5.0, 0.0), Vec3::ZERO)
        },
    ])
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[test]
fn empirical_noise_matches_configured_deviations() {
    let noise = NoiseParams::default();
    let world = pair();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws: Vec<RawObservation> = (0..100_000)
        .map(|_| sense(&world, 0, &noise, 10.0, Dimension::Two, &mut rng))
        .collect();
    let check = |name: &str, xs: Vec<f64>, sigma: f64| {
        let s = sample_std(&xs);
        assert!((s / sigma - 1.0).abs() <= 0.02, "{name}: {s} vs {sigma}");
    };
    check(
        "position",
        draws.iter().map(|o| o.position.x).collect(),
        noise.sigma_p,
    );
    check(
        "velocity",
        draws.iter().map(|o| o.velocity.y).collect(),
        noise.sigma_v,
    );
    check(
        "goal distance",
        draws.iter().map(|o| o.goal_distance).collect(),
        noise.sigma_d,
    );
    check(
        "goal bearing",
        draws.iter().map(|o| o.goal_bearing).collect(),
        noise.sigma_phi,
    );
    check(
        "distance",
        draws.iter().map(|o| o.neighbors[0].distance).collect(),
        noise.sigma_d,
    );
    check(
        "bearing",
        draws.iter().map(|o| o.neighbors[0].bearing).collect(),
        noise.sigma_phi,
    );
    check(
        "relative velocity",
        draws
            .iter()
            .map(|o| o.neighbors[0].relative_velocity.x)
            .collect(),
        noise.sigma_v,
    );
}

#[test]
fn noiseless_observation_is_exact() {
    let world = pair();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let o = sense(
        &world,
        0,
        &NoiseParams::NONE,
        10.0,
        Dimension::Two,
        &mut rng,
    );
    let me = world.agents[0];
    let other = world.agents[1];
    assert_eq!(o.position, me.position);
    assert_eq!(o.velocity, me.velocity);
    let g = me.goal - me.position;
    assert_eq!(o.goal_distance, (g.x * g.x + g.y * g.y).sqrt());
    assert_eq!(o.goal_bearing, g.y.atan2(g.x));
    let d = other.position - me.position;
    assert_eq!(o.neighbors[0].distance, (d.x * d.x + d.y * d.y).sqrt());
    assert_eq!(o.neighbors[0].bearing, d.y.atan2(d.x));
    assert_eq!(
        o.neighbors[0].relative_velocity,
        other.velocity - me.velocity
    );
}

#[test]
fn k_nearest_matches_full_sort_on_1000_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1000 {
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
        let g = me.goal - me.position;
        let mut expected = vec![
            me.position.x,
            me.position.y,
            me.velocity.x,
            me.velocity.y,
            g.x.hypot(g.y),
            g.y.atan2(g.x),
        ];
        for slot in 0..k {
            match oracle.get(slot) {
                Some(&(d, j)) => {
                    let other = world.agents[j];
                    let off = other.position - me.position;
                    let rv = other.velocity - me.velocity;
                    expected.extend([d, off.y.atan2(off.x), rv.x, rv.y]);
                }
                None => expected.extend([range, 0.0, 0.0, 0.0]),
            }
        }
        assert_eq!(reduced.values.len(), expected.len());
        for (a, b) in reduced.values.iter().zip(&expected) {
            assert!(
                (a - b).abs() <= 1e-12,
                "{:?}\n{:?}",
                reduced.values,
                expected
            );
        }
        let present: Vec<bool> = (0..k).map(|s| s < oracle.len()).collect();
        assert_eq!(reduced.present, present);
    }
}

#[test]
fn reduction_ignores_neighbour_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let world = common::random_swarm(&mut rng, 20, 15.0);
        let raw = sense(
            &world,
            0,
            &NoiseParams::default(),
            12.0,
            Dimension::Two,
            &mut rng,
        );
        let mut shuffled = raw.clone();
        shuffled.neighbors.shuffle(&mut rng);
        assert_eq!(
            reduce_k_nearest(&raw, 3, 12.0, Dimension::Two),
            reduce_k_nearest(&shuffled, 3, 12.0, Dimension::Two)
        );
    }
}
