//! Run manifests: everything needed to reproduce a command's outputs.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{sha256_hex, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Semigroup convention applied by every evolution.
pub const SEMIGROUP: &str = "exp(-(t/2) Delta)";

/// Which effective-potential sign and renormalization a run used, and how the sign was chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionRecord {
    pub potential: String,
    /// "certified" when chosen by the annulus oracle, "configured" when fixed by the config.
    pub source: String,
    pub metric: Option<String>,
    pub renorm: String,
    /// Largest relative deviation of the selected candidate from the extrapolated annulus shifts.
    pub max_relative_error: Option<f64>,
    pub tie_broken: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub conventions: Option<ConventionRecord>,
    pub semigroup: String,
    /// Seconds per stage of the command.
    pub wall_times: BTreeMap<String, f64>,
    pub input_hashes: BTreeMap<String, String>,
    /// SHA-256 of every file written, keyed by name relative to the output directory.
    pub outputs: BTreeMap<String, String>,
    pub passed: bool,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, input_hash: &str) -> Self {
        RunManifest {
            tool: "tubehom".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            conventions: None,
            semigroup: SEMIGROUP.into(),
            wall_times: BTreeMap::new(),
            input_hashes: BTreeMap::from([("config".to_string(), input_hash.to_string())]),
            outputs: BTreeMap::new(),
            passed: false,
        }
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.wall_times.insert(stage.to_string(), start.elapsed().as_secs_f64());
        out
    }

    /// Writes `bytes` atomically under `dir` and records its hash.
    pub fn emit(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&dir.join(name), bytes)?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))?;
        write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Serde(e.to_string()))
    }
}
