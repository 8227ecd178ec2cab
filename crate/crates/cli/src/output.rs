//! Artifact directory with a manifest of every file written.

use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use renewal_core::io::Table;

use crate::fail::Fail;

pub const MANIFEST_SCHEMA: u32 = 1;
/// Schema version of the CSV and JSON artifacts.
pub const ARTIFACT_SCHEMA: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Entry {
    pub file: String,
    pub schema_version: u32,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub task: String,
    pub input_sha256: String,
    pub seed: Option<u64>,
    pub outputs: Vec<Entry>,
}

pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<Entry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Artifacts {
    pub fn create(dir: PathBuf) -> Result<Self, Fail> {
        std::fs::create_dir_all(&dir).map_err(|e| Fail::io("out", e))?;
        Ok(Artifacts { dir, entries: Vec::new() })
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<(), Fail> {
        std::fs::write(self.dir.join(name), content).map_err(|e| Fail::io("out", e))?;
        self.entries.push(Entry {
            file: name.to_string(),
            schema_version: ARTIFACT_SCHEMA,
            sha256: sha256_hex(content.as_bytes()),
            bytes: content.len(),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), Fail> {
        self.text(name, &table.to_csv())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Fail> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Fail::io(name, e))?;
        s.push('\n');
        self.text(name, &s)
    }

    /// Write `manifest.json` last, listing every artifact.
    pub fn finish(self, task: &str, input_sha256: String, seed: Option<u64>) -> Result<(), Fail> {
        let m = Manifest {
            schema_version: MANIFEST_SCHEMA,
            tool: format!("renewal-lab {}", env!("CARGO_PKG_VERSION")),
            task: task.to_string(),
            input_sha256,
            seed,
            outputs: self.entries,
        };
        let mut s = serde_json::to_string_pretty(&m).map_err(|e| Fail::io("manifest", e))?;
        s.push('\n');
        std::fs::write(self.dir.join("manifest.json"), s).map_err(|e| Fail::io("out", e))
    }
}
