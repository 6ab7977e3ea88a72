//! Per-run bookkeeping: output files and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Option<String>,
    pub seed: u64,
    pub output_dir: String,
    pub version: String,
    pub started_at: String,
    pub wall_clock_s: f64,
    /// SHA-256 of every input file, keyed by path.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub exit_code: u8,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// State shared by every subcommand: the output directory, the recorded
/// inputs and outputs, and the run's single seeded generator.
pub struct RunContext {
    pub subcommand: String,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out_dir: PathBuf,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
    started_at: String,
    clock: Instant,
    rng: ChaCha8Rng,
}

impl RunContext {
    pub fn new(subcommand: &str, config: Option<PathBuf>, seed: u64, out_dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| CliError::config(format!("{}: {e}", out_dir.display())))?;
        let mut inputs = Vec::new();
        if let Some(c) = &config {
            inputs.push(c.clone());
        }
        Ok(Self {
            subcommand: subcommand.to_string(),
            config,
            seed,
            out_dir,
            inputs,
            outputs: Vec::new(),
            started_at: chrono::Utc::now().to_rfc3339(),
            clock: Instant::now(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Next sub-seed from the run generator.
    pub fn next_seed(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn add_input(&mut self, path: &Path) {
        if !self.inputs.iter().any(|p| p == path) {
            self.inputs.push(path.to_path_buf());
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(&mut self, exit_code: u8) -> Result<RunManifest> {
        let mut inputs = BTreeMap::new();
        for p in &self.inputs {
            inputs.insert(p.display().to_string(), sha256_file(p)?);
        }
        let manifest = RunManifest {
            subcommand: self.subcommand.clone(),
            config: self.config.as_ref().map(|p| p.display().to_string()),
            seed: self.seed,
            output_dir: self.out_dir.display().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: self.started_at.clone(),
            wall_clock_s: self.clock.elapsed().as_secs_f64(),
            inputs,
            outputs: self.outputs.clone(),
            exit_code,
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        let path = self.path(MANIFEST_NAME);
        std::fs::write(&path, text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Ok(manifest)
    }
}
