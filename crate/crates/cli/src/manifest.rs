use crate::error::CliError;
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const MANIFEST_NAME: &str = "run_manifest.json";

/// Everything needed to reproduce one command invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub threads: usize,
    pub git_describe: String,
    pub timestamp: String,
    pub outputs: Vec<PathBuf>,
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

impl RunManifest {
    pub fn new(config: impl Serialize, seed: Option<u64>, threads: usize) -> Result<Self, CliError> {
        Ok(Self {
            command: std::env::args().collect(),
            config: serde_json::to_value(config)?,
            seed,
            threads,
            git_describe: git_describe(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs: Vec::new(),
        })
    }

    /// Writes the manifest into `dir`, replacing any previous one.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}
