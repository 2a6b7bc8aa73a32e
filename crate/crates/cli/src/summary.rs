//! Machine-readable run summaries and console output routing.
//!
//! Every command fills a [`RunSummary`]. In `--json` mode that summary is
//! the only thing printed on stdout, shaped as documented by
//! `schema/run-summary.schema.json`; otherwise commands narrate in plain
//! text and the summary is discarded. Maps are ordered so identical runs
//! serialize to identical bytes.

use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt::Display;

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Resolved inputs: paths and parameters after defaulting.
    pub inputs: BTreeMap<String, Value>,
    /// Files this run wrote.
    pub outputs: Vec<String>,
    /// What the run measured or produced, as scalars or flat arrays.
    pub metrics: BTreeMap<String, Value>,
}

impl RunSummary {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ok: true,
            seed: None,
            error: None,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn failed(command: &str, error: &str) -> Self {
        let mut summary = Self::new(command);
        summary.ok = false;
        summary.error = Some(error.to_string());
        summary
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) {
        self.inputs.insert(key.to_string(), value.into());
    }

    pub fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    pub fn output(&mut self, path: impl Display) {
        self.outputs.push(path.to_string());
    }
}

/// Console front end. Human narration goes to stdout only outside JSON
/// mode, where stdout must carry exactly one summary object.
pub struct Ui {
    pub json: bool,
}

impl Ui {
    pub fn line(&self, text: impl Display) {
        if !self.json {
            println!("{text}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summaries_serialize_with_stable_key_order() {
        let mut a = RunSummary::new("sample");
        a.metric("zeta", 1);
        a.metric("alpha", 2);
        a.input("path", "x");
        let mut b = RunSummary::new("sample");
        b.input("path", "x");
        b.metric("alpha", 2);
        b.metric("zeta", 1);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn optional_fields_disappear_when_unset() {
        let text = serde_json::to_string(&RunSummary::new("sample")).unwrap();
        assert!(!text.contains("seed"));
        assert!(!text.contains("error"));
        let failed = serde_json::to_string(&RunSummary::failed("sample", "boom")).unwrap();
        assert!(failed.contains("\"error\":\"boom\""));
        assert!(failed.contains("\"ok\":false"));
    }
}
