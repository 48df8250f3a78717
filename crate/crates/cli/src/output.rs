//! Output directory with a JSON manifest listing every file written.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Serialize)]
struct FileEntry {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    timestamp: String,
    seed: Option<u64>,
    config: &'a C,
    summary: Value,
    outputs: Vec<FileEntry>,
}

pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        Ok(OutputDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(CliError::io(&path))?;
        println!("{}", path.display());
        self.files.push(FileEntry { file: name.to_string(), sha256: hex::encode(Sha256::digest(bytes)) });
        Ok(())
    }

    /// Runs a CSV writer into memory and stores the result as `name`.
    pub fn csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> ftn_core::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    /// `timestamp` pins the one field that would otherwise vary between runs.
    pub fn finish<C: Serialize>(
        mut self,
        command: &str,
        config: &C,
        seed: Option<u64>,
        summary: Value,
        timestamp: Option<&str>,
    ) -> Result<()> {
        let timestamp = match timestamp {
            Some(t) => t.to_string(),
            None => SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0).to_string(),
        };
        let files = std::mem::take(&mut self.files);
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            timestamp,
            seed,
            config,
            summary,
            outputs: files,
        };
        let mut json = serde_json::to_vec_pretty(&manifest)?;
        json.push(b'\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, json).map_err(CliError::io(&path))?;
        println!("{}", path.display());
        Ok(())
    }
}
