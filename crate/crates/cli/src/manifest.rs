//! Provenance record written next to every output file as `<file>.manifest.json`.
//!
//! The artifact itself stays byte-stable; anything that varies between runs
//! (timestamps, wall-clock time) lives here.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use maxload_core::formats::to_canonical_string;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub command_line: Vec<String>,
    /// Input path to SHA-256 of its contents.
    pub input_digests: BTreeMap<String, String>,
    pub output_digest: String,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub elapsed_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Collects inputs as they are read; finalized once per output.
pub struct Recorder {
    started: u64,
    clock: Instant,
    inputs: BTreeMap<String, String>,
}

impl Recorder {
    pub fn start() -> Self {
        Recorder {
            started: unix_now(),
            clock: Instant::now(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(path.display().to_string(), sha256_hex(bytes));
    }

    pub fn manifest(&self, output: &[u8]) -> RunManifest {
        RunManifest {
            command_line: std::env::args().collect(),
            input_digests: self.inputs.clone(),
            output_digest: sha256_hex(output),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: self.started,
            finished_unix: unix_now(),
            elapsed_seconds: self.clock.elapsed().as_secs_f64(),
        }
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn render(manifest: &RunManifest) -> String {
    to_canonical_string(serde_json::to_value(manifest).expect("manifest serializes"))
}
