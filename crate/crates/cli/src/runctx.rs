//! Run directories: every subcommand writes its artifacts plus a
//! `manifest.json` recording the tool version, resolved parameters, seed,
//! and content hashes of all inputs and outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
struct FileHash {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    params: &'a serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    inputs: &'a [FileHash],
    outputs: &'a [FileHash],
}

pub struct RunContext {
    subcommand: String,
    out_dir: PathBuf,
    params: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<FileHash>,
    outputs: Vec<FileHash>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunContext {
    pub fn new(subcommand: &str, out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir)
            .with_context(|| format!("creating run directory {}", out_dir.display()))?;
        Ok(RunContext {
            subcommand: subcommand.to_string(),
            out_dir: out_dir.to_path_buf(),
            params: serde_json::Value::Null,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn set_params<T: Serialize>(&mut self, params: &T) -> Result<()> {
        self.params = serde_json::to_value(params)?;
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileHash {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Write an artifact into the run directory and record its hash.
    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(FileHash {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(path)
    }

    pub fn write_output_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_output(name, text.as_bytes())
    }

    /// Write `manifest.json`; call last so every artifact is recorded.
    pub fn finish(self) -> Result<()> {
        let manifest = RunManifest {
            tool: "xtune",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: &self.subcommand,
            params: &self.params,
            seed: self.seed,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.out_dir.join("manifest.json"), text)?;
        Ok(())
    }
}
