//! Atomic output files and run manifests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use coset::{ExpansionConfig, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub schema: String,
    pub master_seed: u64,
    pub config: ExpansionConfig,
    pub inputs: BTreeMap<String, InputDigest>,
    pub outputs: Vec<String>,
}

/// Collects output files in memory so that nothing is written until the
/// command has succeeded.
pub struct RunOutput {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
    inputs: BTreeMap<String, InputDigest>,
}

impl RunOutput {
    pub fn new(dir: PathBuf) -> Self {
        Self {
            dir,
            files: Vec::new(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let digest = InputDigest {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        };
        self.inputs.insert(role.to_string(), digest);
        Ok(())
    }

    pub fn file(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.file(name, bytes);
        Ok(())
    }

    /// Writes every file, then the manifest last.
    pub fn commit(self, subcommand: &str, argv: &[String], schema: &str, config: &ExpansionConfig) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut outputs = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            write_atomic(&self.dir.join(name), bytes)?;
            log::info!("wrote {}", self.dir.join(name).display());
            outputs.push(name.clone());
        }
        let manifest = Manifest {
            tool: "coset".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            argv: argv.iter().skip(1).cloned().collect(),
            schema: schema.into(),
            master_seed: config.master_seed,
            config: config.clone(),
            inputs: self.inputs,
            outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        write_atomic(&self.dir.join("manifest.json"), &bytes)
    }
}
