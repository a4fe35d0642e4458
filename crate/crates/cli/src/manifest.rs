use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// Provenance record embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Self {
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            tolerances: BTreeMap::new(),
            timestamp,
        }
    }

    pub fn input(mut self, path: impl Into<String>) -> Self {
        self.inputs.push(path.into());
        self
    }

    pub fn output(mut self, path: impl Into<String>) -> Self {
        self.outputs.push(path.into());
        self
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_owned(), value);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_records_provenance() {
        let m = RunManifest::new("solve", 9)
            .input("y.json")
            .output("out.json")
            .tolerance("tol_eig", 1e-9)
            .tolerance("tol_eig", 2e-9);
        assert_eq!(m.inputs, ["y.json"]);
        assert_eq!(m.outputs, ["out.json"]);
        assert_eq!(m.tolerances.len(), 1);
        assert_eq!(m.tolerances["tol_eig"], 2e-9);
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(v["command"], "solve");
    }
}
