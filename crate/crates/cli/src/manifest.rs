use std::path::{Path, PathBuf};

use collage_core::config::{sha256_hex, RunConfig};
use collage_core::Result;
use serde::Serialize;

/// Written next to every output so a run can be repeated.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub inputs: Vec<String>,
    pub seed: u64,
    pub outputs: Vec<String>,
    /// SHA-256 over each input's path and content digest, in input order.
    pub input_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, inputs: &[PathBuf]) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            config: config.clone(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            seed: config.train.seed,
            outputs: Vec::new(),
            input_hash: content_hash(inputs)?,
            metrics: None,
        })
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::from)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

pub fn content_hash(files: &[PathBuf]) -> Result<String> {
    let mut listing = String::new();
    for f in files {
        let digest = sha256_hex(&std::fs::read(f)?);
        listing.push_str(&format!("{digest} {}\n", f.display()));
    }
    Ok(sha256_hex(listing.as_bytes()))
}
