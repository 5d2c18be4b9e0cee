//! Run manifests. They hold no timestamps, so replays are byte-identical.

use std::fs;
use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use crate::io::file_digest;

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    #[serde(skip)]
    output_names: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str, args: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            tool: "auditsel",
            version: env!("CARGO_PKG_VERSION"),
            core_version: auditsel_core::VERSION,
            command,
            seed,
            config: serde_json::to_value(args)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            output_names: Vec::new(),
        })
    }

    pub fn input(mut self, path: &Path) -> Result<Self> {
        self.inputs.push(FileEntry {
            path: path.display().to_string(),
            sha256: file_digest(path)?,
        });
        Ok(self)
    }

    pub fn outputs(mut self, names: &[&str]) -> Self {
        self.output_names
            .extend(names.iter().map(|s| s.to_string()));
        self
    }

    /// Hashes the outputs in `dir` and writes `manifest.json` there.
    pub fn write(mut self, dir: &Path) -> Result<()> {
        for name in std::mem::take(&mut self.output_names) {
            self.outputs.push(FileEntry {
                sha256: file_digest(&dir.join(&name))?,
                path: name,
            });
        }
        let mut json = serde_json::to_string_pretty(&self)?;
        json.push('\n');
        fs::write(dir.join("manifest.json"), json)?;
        Ok(())
    }
}
