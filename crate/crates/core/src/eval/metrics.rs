//! Episode metrics, all computed from a trace alone.
//!
//! Reference flight: straight toward the goal at `v_max` until inside the
//! capture radius, i.e. `max(0, D - capture) / v_max` seconds for an initial
//! goal distance `D`.

use serde::{Deserialize, Serialize};

use super::trace::EpisodeTrace;
use crate::error::{Error, Result};
use crate::scenario::{GoalEvent, ScenarioKind, COLLISION_DISTANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub controller: String,
    pub seed: u64,
    pub scenario: ScenarioKind,
    pub agents: usize,
    pub steps: u64,
    pub duration_s: f64,
    /// Mean over agents of arrival time minus reference time (s).
    pub extra_time_to_goal: Option<f64>,
    /// Smallest true distance between any two agents (m).
    pub min_distance: Option<f64>,
    /// Mean over agents of travelled minus straight distance (m).
    pub extra_distance: Option<f64>,
    /// Mean over agents of travelled over straight distance.
    pub distance_ratio: Option<f64>,
    pub packages_per_agent: Option<f64>,
    /// Pair encounters closer than the collision distance.
    pub collisions: u32,
    /// Some agent never reached its formation-change goal.
    pub deadlock: bool,
}

/// Mean of per-run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub controller: String,
    pub scenario: ScenarioKind,
    pub agents: usize,
    pub runs: usize,
    pub extra_time_to_goal: Option<f64>,
    pub min_distance: Option<f64>,
    /// Smallest per-run minimum.
    pub worst_min_distance: Option<f64>,
    pub extra_distance: Option<f64>,
    pub distance_ratio: Option<f64>,
    pub packages_per_agent: Option<f64>,
    pub collisions: f64,
    pub total_collisions: u32,
    pub deadlocks: usize,
}

/// Step count (1-based) at which each agent is first strictly inside the
/// capture radius of its initial goal; `None` if never.
pub fn arrival_steps(trace: &EpisodeTrace) -> Vec<Option<usize>> {
    let capture = trace.header.config.capture_radius;
    let goals: Vec<_> = trace.header.initial.agents.iter().map(|a| a.goal).collect();
    let mut arrived = vec![None; goals.len()];
    for (t, step) in trace.steps.iter().enumerate() {
        for (i, a) in step.agents.iter().enumerate() {
            if arrived[i].is_none() && (a.position - goals[i]).length() < capture {
                arrived[i] = Some(t + 1);
            }
        }
    }
    arrived
}

fn require_formation_change(trace: &EpisodeTrace, metric: &str) -> Result<()> {
    match trace.header.config.scenario {
        ScenarioKind::FormationChange => Ok(()),
        other => Err(Error::Usage(format!(
            "{metric} is defined for formation change, not {other}"
        ))),
    }
}

fn reference_distance(trace: &EpisodeTrace, agent: usize) -> f64 {
    trace.header.initial.agents[agent].goal_offset().length()
}

/// Extra time to goal (s) and the deadlock flag. Agents that never arrive
/// are censored at the end of the trace.
pub fn extra_time_to_goal(trace: &EpisodeTrace) -> Result<(f64, bool)> {
    require_formation_change(trace, "extra time to goal")?;
    let cfg = &trace.header.config;
    let arrivals = arrival_steps(trace);
    let n = arrivals.len();
    let mut total = 0.0;
    let mut deadlock = false;
    for (i, arrival) in arrivals.iter().enumerate() {
        let steps = arrival.unwrap_or_else(|| {
            deadlock = true;
            trace.steps.len()
        });
        let reference = (reference_distance(trace, i) - cfg.capture_radius).max(0.0) / cfg.v_max;
        total += steps as f64 * cfg.dt - reference;
    }
    Ok((total / n as f64, deadlock))
}

/// Smallest pairwise distance at each recorded instant; `None` below two
/// agents.
pub fn min_distance_series(trace: &EpisodeTrace) -> Option<Vec<f64>> {
    if trace.num_agents() < 2 {
        return None;
    }
    Some(
        trace
            .positions()
            .map(|p| {
                let mut best = f64::INFINITY;
                for i in 0..p.len() {
                    for j in i + 1..p.len() {
                        best = best.min((p[i] - p[j]).length());
                    }
                }
                best
            })
            .collect(),
    )
}

pub fn min_interagent_distance(trace: &EpisodeTrace) -> Option<f64> {
    min_distance_series(trace).map(|s| s.into_iter().fold(f64::INFINITY, f64::min))
}

/// Number of times a pair of agents comes closer than the collision
/// distance; a pair staying close counts once.
pub fn collision_count(trace: &EpisodeTrace) -> u32 {
    let n = trace.num_agents();
    let mut close = vec![false; n * n];
    let mut count = 0;
    for p in trace.positions() {
        for i in 0..n {
            for j in i + 1..n {
                let now = (p[i] - p[j]).length() < COLLISION_DISTANCE;
                if now && !close[i * n + j] {
                    count += 1;
                }
                close[i * n + j] = now;
            }
        }
    }
    count
}

/// Extra travelled distance as `(absolute m, ratio)`, averaged over agents.
/// Each path runs until arrival (or the end of the trace) and is completed
/// by the straight remainder to the goal, so a straight flight scores
/// exactly `(0, 1)`.
pub fn extra_travelled_distance(trace: &EpisodeTrace) -> Result<(f64, f64)> {
    require_formation_change(trace, "extra travelled distance")?;
    let arrivals = arrival_steps(trace);
    let n = arrivals.len();
    let positions: Vec<_> = trace.positions().collect();
    let mut abs = 0.0;
    let mut ratio = 0.0;
    for (i, arrival) in arrivals.iter().enumerate() {
        let last = arrival.unwrap_or(trace.steps.len());
        let mut length = 0.0;
        for t in 0..last {
            length += (positions[t + 1][i] - positions[t][i]).length();
        }
        let goal = trace.header.initial.agents[i].goal;
        length += (goal - positions[last][i]).length();
        let straight = reference_distance(trace, i);
        abs += length - straight;
        ratio += if straight > 0.0 {
            length / straight
        } else {
            1.0
        };
    }
    Ok((abs / n as f64, ratio / n as f64))
}

/// Collected packages divided by the number of agents.
pub fn packages_per_agent(trace: &EpisodeTrace) -> Result<f64> {
    match trace.header.config.scenario {
        ScenarioKind::PackageDelivery => {}
        other => {
            return Err(Error::Usage(format!(
                "packages per agent needs package delivery, not {other}"
            )))
        }
    }
    let collected = trace
        .events()
        .filter(|e| matches!(e, GoalEvent::PackageCollected { .. }))
        .count();
    Ok(collected as f64 / trace.num_agents() as f64)
}

pub fn compute_metrics(trace: &EpisodeTrace) -> MetricsReport {
    let cfg = &trace.header.config;
    let fc = cfg.scenario == ScenarioKind::FormationChange;
    let time = fc.then(|| extra_time_to_goal(trace).expect("formation change"));
    let dist = fc.then(|| extra_travelled_distance(trace).expect("formation change"));
    MetricsReport {
        controller: trace.header.controller.clone(),
        seed: trace.header.seed,
        scenario: cfg.scenario,
        agents: trace.num_agents(),
        steps: trace.steps.len() as u64,
        duration_s: trace.steps.len() as f64 * cfg.dt,
        extra_time_to_goal: time.map(|t| t.0),
        min_distance: min_interagent_distance(trace),
        extra_distance: dist.map(|d| d.0),
        distance_ratio: dist.map(|d| d.1),
        packages_per_agent: packages_per_agent(trace).ok(),
        collisions: collision_count(trace),
        deadlock: time.is_some_and(|t| t.1),
    }
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Arithmetic means over runs. Panics on an empty slice.
pub fn aggregate(reports: &[MetricsReport]) -> MetricsSummary {
    let first = &reports[0];
    let n = reports.len() as f64;
    let total_collisions: u32 = reports.iter().map(|r| r.collisions).sum();
    MetricsSummary {
        controller: first.controller.clone(),
        scenario: first.scenario,
        agents: first.agents,
        runs: reports.len(),
        extra_time_to_goal: mean_of(reports.iter().map(|r| r.extra_time_to_goal)),
        min_distance: mean_of(reports.iter().map(|r| r.min_distance)),
        worst_min_distance: reports
            .iter()
            .filter_map(|r| r.min_distance)
            .reduce(f64::min),
        extra_distance: mean_of(reports.iter().map(|r| r.extra_distance)),
        distance_ratio: mean_of(reports.iter().map(|r| r.distance_ratio)),
        packages_per_agent: mean_of(reports.iter().map(|r| r.packages_per_agent)),
        collisions: total_collisions as f64 / n,
        total_collisions,
        deadlocks: reports.iter().filter(|r| r.deadlock).count(),
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.2}"))
}

/// Plain-text comparison table.
pub fn format_table(summaries: &[MetricsSummary]) -> String {
    let mut s = format!(
        "{:<10} {:>4} {:>5} {:>10} {:>9} {:>10} {:>7} {:>9} {:>10} {:>9}\n",
        "controller",
        "N",
        "runs",
        "extra_t_s",
        "min_d_m",
        "extra_d_m",
        "ratio",
        "packages",
        "collisions",
        "deadlocks"
    );
    for m in summaries {
        s += &format!(
            "{:<10} {:>4} {:>5} {:>10} {:>9} {:>10} {:>7} {:>9} {:>10.2} {:>9}\n",
            m.controller,
            m.agents,
            m.runs,
            cell(m.extra_time_to_goal),
            cell(m.min_distance),
            cell(m.extra_distance),
            cell(m.distance_ratio),
            cell(m.packages_per_agent),
            m.collisions,
            m.deadlocks
        );
    }
    s
}
