//! CSV series for external plotting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::metrics::min_distance_series;
use super::trace::EpisodeTrace;
use crate::error::{Error, Result};

/// One row per agent per recorded instant:
/// `step,time_s,agent,x,y,z,vx,vy,vz,yaw,goal_x,goal_y,goal_z`.
pub fn trajectories_csv(trace: &EpisodeTrace) -> String {
    let dt = trace.dt();
    let mut s = String::from("step,time_s,agent,x,y,z,vx,vy,vz,yaw,goal_x,goal_y,goal_z\n");
    let states = std::iter::once((0, &trace.header.initial.agents)).chain(
        trace
            .steps
            .iter()
            .enumerate()
            .map(|(t, st)| (t + 1, &st.agents)),
    );
    for (t, agents) in states {
        for (i, a) in agents.iter().enumerate() {
            let _ = writeln!(
                s,
                "{t},{},{i},{},{},{},{},{},{},{},{},{},{}",
                t as f64 * dt,
                a.position.x,
                a.position.y,
                a.position.z,
                a.velocity.x,
                a.velocity.y,
                a.velocity.z,
                a.yaw,
                a.goal.x,
                a.goal.y,
                a.goal.z
            );
        }
    }
    s
}

/// `step,time_s,min_distance_m`; empty body for a single agent.
pub fn min_distance_csv(trace: &EpisodeTrace) -> String {
    let dt = trace.dt();
    let mut s = String::from("step,time_s,min_distance_m\n");
    for (t, d) in min_distance_series(trace)
        .unwrap_or_default()
        .iter()
        .enumerate()
    {
        let _ = writeln!(s, "{t},{},{d}", t as f64 * dt);
    }
    s
}

/// Writes `trajectories.csv` and `min_distance.csv` into `dir`.
pub fn write_plot_data(trace: &EpisodeTrace, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (name, body) in [
        ("trajectories.csv", trajectories_csv(trace)),
        ("min_distance.csv", min_distance_csv(trace)),
    ] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
