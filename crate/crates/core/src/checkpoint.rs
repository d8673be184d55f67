//! Policy checkpoints: JSON with exact float round-tripping, tagged with the
//! fingerprint of the training config.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{hex_digest, Config};
use crate::error::{Error, Result};
use crate::policy::PolicyParameters;
use crate::trainer::AdamState;

pub const CHECKPOINT_SCHEMA: &str = "knn-swarm/checkpoint/v1";

/// Optimizer and progress counters needed to continue training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub adam: AdamState,
    pub iteration: u64,
    pub total_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub config_fingerprint: String,
    pub config: Config,
    pub policy: PolicyParameters,
    pub trainer: Option<TrainerState>,
}

impl Checkpoint {
    pub fn new(config: &Config, policy: PolicyParameters, trainer: Option<TrainerState>) -> Self {
        Self {
            schema: CHECKPOINT_SCHEMA.into(),
            config_fingerprint: config.fingerprint(),
            config: config.clone(),
            policy,
            trainer,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        serde_json::to_writer(&mut w, self).map_err(|e| Error::Format {
            what: "checkpoint",
            message: e.to_string(),
        })?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint =
            serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Format {
                what: "checkpoint",
                message: format!("{}: {e}", path.display()),
            })?;
        if ck.schema != CHECKPOINT_SCHEMA {
            return Err(Error::Format {
                what: "checkpoint",
                message: format!("unsupported schema {:?}", ck.schema),
            });
        }
        if ck.config.fingerprint() != ck.config_fingerprint {
            return Err(Error::TamperedTrace {
                diff: "embedded config does not hash to the stored fingerprint".into(),
            });
        }
        if ck.policy.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Format {
                what: "checkpoint",
                message: "non-finite policy parameter".into(),
            });
        }
        Ok(ck)
    }

    /// Refuses a config other than the one the checkpoint was trained with.
    pub fn verify_config(&self, config: &Config) -> Result<()> {
        if config.fingerprint() == self.config_fingerprint {
            return Ok(());
        }
        Err(Error::FingerprintMismatch {
            diff: self.config.diff(config).join("\n"),
        })
    }
}

impl PolicyParameters {
    /// SHA-256 of the exact parameter bits.
    pub fn fingerprint(&self) -> String {
        let bytes: Vec<u8> = self
            .params
            .iter()
            .flat_map(|p| p.to_bits().to_le_bytes())
            .collect();
        hex_digest(&bytes)
    }
}
