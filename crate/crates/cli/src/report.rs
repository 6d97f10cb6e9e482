//! Report bundles: a key-value summary plus named CSV files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// SHA-256 of the canonical configuration text, hex encoded.
pub fn fingerprint(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_text().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Everything one command emits.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub summary: BTreeMap<String, Value>,
    /// File name → contents, written next to the summary.
    pub files: BTreeMap<String, String>,
}

impl ReportBundle {
    /// Starts a bundle stamped with the command, config fingerprint and seeds.
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        let mut summary = BTreeMap::new();
        summary.insert("command".into(), Value::from(command));
        summary.insert("config_fingerprint".into(), Value::from(fingerprint(cfg)));
        summary.insert("seeds".into(), Value::from(cfg.seeds.clone()));
        Self { summary, files: BTreeMap::new() }
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.summary.insert(key.into(), value.into());
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    pub fn get_bool(&self, key: &str) -> Option<bool> {
        self.summary.get(key).and_then(Value::as_bool)
    }

    /// Adds a CSV file whose first line names the figure it feeds.
    pub fn add_csv(&mut self, name: impl Into<String>, figure: &str, body: String) {
        self.files.insert(name.into(), format!("# figure: {figure}\n{body}"));
    }

    pub fn add_file(&mut self, name: impl Into<String>, body: String) {
        self.files.insert(name.into(), body);
    }

    /// Pretty-printed JSON object with keys in sorted order.
    pub fn summary_json(&self) -> String {
        let map: Map<String, Value> = self.summary.clone().into_iter().collect();
        let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn parse_summary(text: &str) -> Result<BTreeMap<String, Value>, serde_json::Error> {
        let v: Map<String, Value> = serde_json::from_str(text)?;
        Ok(v.into_iter().collect())
    }

    /// Writes `summary.json` and every file into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.json"), self.summary_json())?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }

    /// Merges another bundle's entries under `prefix.`; an empty prefix keeps the keys.
    pub fn absorb(&mut self, prefix: &str, other: ReportBundle) {
        let join = |sep: char, k: String| if prefix.is_empty() { k } else { format!("{prefix}{sep}{k}") };
        for (k, v) in other.summary {
            if k != "config_fingerprint" && k != "seeds" && k != "command" {
                self.summary.insert(join('.', k), v);
            }
        }
        for (k, v) in other.files {
            self.files.insert(join('_', k), v);
        }
    }
}
