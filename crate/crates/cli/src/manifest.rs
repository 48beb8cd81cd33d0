use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Command;

/// Everything needed to reproduce a run. Written next to each output file
/// as `<output>.manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Command,
    /// The problem file contents, inlined so replays do not depend on it.
    pub problem: Option<Value>,
    pub version: String,
    pub seed: Option<u64>,
    pub timestamp_unix: u64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(config: &Command, problem: Option<&Value>, outputs: Vec<PathBuf>) -> Self {
        let seed = match config {
            Command::Simulate(a) => Some(a.sim.seed),
            _ => None,
        };
        Self {
            command: config.name().into(),
            config: config.clone(),
            problem: problem.cloned(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            outputs,
        }
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }
}
