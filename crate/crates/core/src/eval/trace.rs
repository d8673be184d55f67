//! JSON-lines episode traces: one header line, one line per step, one
//! closing line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::dynamics::{AgentAction, AgentState, SwarmState};
use crate::error::{Error, Result};
use crate::scenario::GoalEvent;
use crate::Vec3;

pub const TRACE_SCHEMA: &str = "knn-swarm/trace/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub config: Config,
    pub config_fingerprint: String,
    pub seed: u64,
    pub controller: String,
    /// Hash of the policy parameters when the controller is a policy.
    pub policy_fingerprint: Option<String>,
    /// The start state was supplied by the caller rather than drawn from
    /// the scenario.
    pub custom_start: bool,
    pub initial: SwarmState,
}

/// Post-step state of every agent plus what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: u64,
    pub agents: Vec<AgentState>,
    /// Clipped commands applied this step.
    pub actions: Vec<AgentAction>,
    pub rewards: Vec<f64>,
    pub events: Vec<GoalEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEnd {
    pub steps: u64,
    pub wall_time_s: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
enum Line {
    Header(TraceHeader),
    Step(TraceStep),
    End(TraceEnd),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub steps: Vec<TraceStep>,
    pub wall_time_s: f64,
}

impl EpisodeTrace {
    pub fn num_agents(&self) -> usize {
        self.header.initial.len()
    }

    pub fn dt(&self) -> f64 {
        self.header.config.dt
    }

    /// Positions of all agents at every recorded instant, the initial state
    /// first.
    pub fn positions(&self) -> impl Iterator<Item = Vec<Vec3>> + '_ {
        std::iter::once(&self.header.initial.agents)
            .chain(self.steps.iter().map(|s| &s.agents))
            .map(|agents| agents.iter().map(|a| a.position).collect())
    }

    pub fn events(&self) -> impl Iterator<Item = &GoalEvent> {
        self.steps.iter().flat_map(|s| &s.events)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("JSON is UTF-8")
    }

    fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let line = |l: &Line| serde_json::to_string(l).expect("trace line serializes");
        writeln!(w, "{}", line(&Line::Header(self.header.clone())))?;
        for s in &self.steps {
            writeln!(w, "{}", line(&Line::Step(s.clone())))?;
        }
        writeln!(
            w,
            "{}",
            line(&Line::End(TraceEnd {
                steps: self.steps.len() as u64,
                wall_time_s: self.wall_time_s,
            }))
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f)).map_err(|e| match e {
            Error::Format { what, message } => Error::Format {
                what,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }

    fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let bad = |message: String| Error::Format {
            what: "trace",
            message,
        };
        let mut header = None;
        let mut steps = Vec::new();
        let mut wall_time_s = 0.0;
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line =
                serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
            match (parsed, header.is_some()) {
                (Line::Header(h), false) => {
                    if h.schema != TRACE_SCHEMA {
                        return Err(bad(format!("unsupported schema {:?}", h.schema)));
                    }
                    header = Some(h);
                }
                (Line::Header(_), true) => {
                    return Err(bad(format!("line {}: second header", n + 1)))
                }
                (_, false) => return Err(bad("first line must be the header".into())),
                (Line::Step(s), true) => steps.push(s),
                (Line::End(e), true) => {
                    if e.steps != steps.len() as u64 {
                        return Err(bad(format!(
                            "end line counts {} steps, found {}",
                            e.steps,
                            steps.len()
                        )));
                    }
                    wall_time_s = e.wall_time_s;
                }
            }
        }
        let header = header.ok_or_else(|| bad("empty trace".into()))?;
        Ok(Self {
            header,
            steps,
            wall_time_s,
        })
    }
}
