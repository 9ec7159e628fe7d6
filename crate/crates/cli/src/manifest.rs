//! Run manifests: enough context to replay any command and reproduce its
//! outputs.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    /// Full argv as invoked, minus the binary path.
    pub args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_ms: u128,
}

pub struct ManifestBuilder {
    command: String,
    seed: Option<u64>,
    threads: Option<usize>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: Option<u64>, threads: Option<usize>) -> Self {
        Self {
            command: command.to_string(),
            seed,
            threads,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(self, path: &Path) -> pdg_core::Result<()> {
        let manifest = RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            command: self.command,
            args: std::env::args().skip(1).collect(),
            seed: self.seed,
            threads: self.threads,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_ms: self.started.elapsed().as_millis(),
        };
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(file, &manifest)?;
        Ok(())
    }
}
