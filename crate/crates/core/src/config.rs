//! Run configuration: environment plus training settings, loaded from TOML
//! on top of the defaults.
//!
//! Keys are dotted paths into the structure (`env.max_step`,
//! `train.lr`, `env.scorer.eta`); `scorer.*` is accepted as shorthand for
//! `env.scorer.*`. Unknown keys are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::env::EnvConfig;
use crate::error::{CollageError, Result};
use crate::harness::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| CollageError::config(format!("invalid TOML: {e}")))?;
        let mut leaves = Vec::new();
        flatten("", toml::Value::Table(table), &mut leaves);
        let mut cfg = RunConfig::default();
        for (key, value) in leaves {
            cfg.set_value(&key, toml_to_json(value))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Overrides one key. `value` is read as a TOML value, falling back to a
    /// bare string (`--set env.target_aspect=16:9`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .map(toml_to_json)
            .unwrap_or_else(|| Value::String(value.to_string()));
        self.set_value(key, parsed)
    }

    fn set_value(&mut self, key: &str, value: Value) -> Result<()> {
        let path = canonical_key(key);
        let mut root = serde_json::to_value(&*self).expect("config serializes");
        let mut node = &mut root;
        for part in path.split('.') {
            node = node
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| CollageError::config(format!("unknown config key `{key}`")))?;
        }
        if node.is_object() {
            return Err(CollageError::config(format!("config key `{key}` names a section, not a value")));
        }
        *node = value;
        *self =
            serde_json::from_value(root).map_err(|e| CollageError::config(format!("bad value for `{key}`: {e}")))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.train.validate()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn canonical_key(key: &str) -> String {
    match key.strip_prefix("scorer.") {
        Some(rest) => format!("env.scorer.{rest}"),
        None => key.to_string(),
    }
}

fn flatten(prefix: &str, value: toml::Value, out: &mut Vec<(String, toml::Value)>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        leaf => out.push((prefix.to_string(), leaf)),
    }
}

fn toml_to_json(v: toml::Value) -> Value {
    match v {
        toml::Value::String(s) => Value::String(s),
        toml::Value::Integer(i) => Value::from(i),
        toml::Value::Float(f) => Value::from(f),
        toml::Value::Boolean(b) => Value::Bool(b),
        toml::Value::Datetime(d) => Value::String(d.to_string()),
        toml::Value::Array(a) => Value::Array(a.into_iter().map(toml_to_json).collect()),
        toml::Value::Table(t) => Value::Object(t.into_iter().map(|(k, v)| (k, toml_to_json(v))).collect()),
    }
}
