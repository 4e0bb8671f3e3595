use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::failure::CliResult;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the compact JSON form of `config` (fields in declaration order).
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let value = serde_json::to_value(config).expect("configs serialize");
    let canonical = serde_json::to_string(&value).expect("values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Provenance fields shared by every enveloped output.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new<T: Serialize>(config: &T, seed: Option<u64>) -> Self {
        Provenance {
            config_hash: config_hash(config),
            seed,
        }
    }

    /// `{tool_version, config_hash, seed}` followed by the payload's fields.
    pub fn wrap<T: Serialize>(&self, payload: &T) -> Value {
        let mut map = Map::new();
        map.insert("tool_version".into(), TOOL_VERSION.into());
        map.insert("config_hash".into(), self.config_hash.clone().into());
        map.insert("seed".into(), self.seed.map_or(Value::Null, Value::from));
        match serde_json::to_value(payload).expect("payloads serialize") {
            Value::Object(fields) => map.extend(fields),
            other => {
                map.insert("data".into(), other);
            }
        }
        Value::Object(map)
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let result: anyhow::Result<()> = (|| {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut builder = tempfile::Builder::new();
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            builder.permissions(std::fs::Permissions::from_mode(0o644));
        }
        let mut tmp = builder
            .tempfile_in(dir)
            .with_context(|| format!("temp file in {}", dir.display()))?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    })();
    result.map_err(|e| crate::failure::Failure::compute("io", format!("{e:#}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("values serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
