//! Run manifests: a JSON record written next to every CLI output directory,
//! capturing the command, resolved parameters, seed, tool version, the
//! SHA-256 of the input configuration, the produced files and wall-clock
//! timings. Timings vary between runs; everything else is deterministic.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    pub input_config_hash: String,
    pub output_files: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            parameters,
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_config_hash: String::new(),
            output_files: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn set_input_hash(&mut self, bytes: &[u8]) {
        self.input_config_hash = sha256_hex(bytes);
    }

    pub fn record_output(&mut self, path: &Path) {
        self.output_files.push(path.display().to_string());
    }

    pub fn record_timing(&mut self, stage: &str, elapsed: std::time::Duration) {
        self.timings_ms
            .insert(stage.to_string(), elapsed.as_secs_f64() * 1e3);
    }

    /// Write the manifest as pretty JSON; the manifest itself is not added
    /// to its own output list.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write as _;
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = RunManifest::new(
            "generate",
            serde_json::json!({"kind": "planar", "n": 15}),
        )
        .with_seed(7);
        manifest.set_input_hash(b"{}");
        manifest.record_output(Path::new("config.json"));
        manifest.record_timing("generate", std::time::Duration::from_millis(12));
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["command"], "generate");
        assert_eq!(value["seed"], 7);
        assert_eq!(value["output_files"][0], "config.json");
        assert!(value["timings_ms"]["generate"].as_f64().unwrap() > 0.0);
        assert_eq!(value["input_config_hash"].as_str().unwrap().len(), 64);
    }
}
