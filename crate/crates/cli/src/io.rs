use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use bpc_core::Observations64;
use serde::Serialize;
use serde_json::Value;

use crate::manifest::RunManifest;

/// Reads observations from a file holding either `{"kc", "y"}` or a
/// `generate` bundle with an `"observations"` field.
pub fn read_observations(path: &Path) -> Result<Observations64> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let inner = value.get("observations").cloned().unwrap_or(value);
    serde_json::from_value(inner)
        .with_context(|| format!("{} does not hold valid observations", path.display()))
}

/// `payload` as a JSON object with the manifest attached.
pub fn with_manifest<T: Serialize>(payload: &T, manifest: &RunManifest) -> Result<Value> {
    let mut value = serde_json::to_value(payload)?;
    match value.as_object_mut() {
        Some(obj) => {
            obj.insert("manifest".into(), serde_json::to_value(manifest)?);
            Ok(value)
        }
        None => Ok(serde_json::json!({ "manifest": manifest, "result": value })),
    }
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn print_json(value: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}
