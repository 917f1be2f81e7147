//! Record of one analysis run: configuration, input digest and output paths.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::rolling::AnalysisConfig;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(path: &str, contents: &[u8]) -> Self {
        Self { path: path.to_string(), bytes: contents.len(), sha256: sha256_hex(contents) }
    }
}

/// Paths are relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowOutputs {
    pub index: usize,
    pub label_date: String,
    pub json: String,
    pub graphs: Vec<String>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub input: InputDigest,
    pub config: AnalysisConfig,
    pub n_observations: usize,
    pub assets: Vec<String>,
    pub outputs: Vec<String>,
    pub windows: Vec<WindowOutputs>,
}

impl RunManifest {
    pub fn new(input: InputDigest, config: AnalysisConfig, timestamp: DateTime<Utc>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
            input,
            config,
            n_observations: 0,
            assets: Vec::new(),
            outputs: Vec::new(),
            windows: Vec::new(),
        }
    }

    /// Every listed file, run-level outputs first.
    pub fn all_paths(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.outputs.iter().map(String::as_str).collect();
        for w in &self.windows {
            v.push(&w.json);
            v.extend(w.graphs.iter().map(String::as_str));
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        let d = InputDigest::new("x.csv", b"abc");
        assert_eq!(d.bytes, 3);
    }

    #[test]
    fn manifest_serializes_config_and_paths() {
        let ts = DateTime::from_timestamp(0, 0).unwrap();
        let mut m = RunManifest::new(InputDigest::new("in.csv", b""), AnalysisConfig::default(), ts);
        m.outputs.push("market_series.csv".into());
        m.windows.push(WindowOutputs {
            index: 0,
            label_date: "2001-01-01".into(),
            json: "windows/000.json".into(),
            graphs: vec!["graphs/000.dot".into()],
            degenerate: false,
        });
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["timestamp"], "1970-01-01T00:00:00Z");
        assert_eq!(v["config"]["window_len"], 250);
        assert_eq!(m.all_paths(), ["market_series.csv", "windows/000.json", "graphs/000.dot"]);
    }
}
