//! Output directory with a checksum manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct Entry {
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    level: &'a str,
    seed: u64,
    grid: Option<serde_json::Value>,
    inputs: BTreeMap<String, Entry>,
    outputs: BTreeMap<String, Entry>,
}

/// Collects the artefacts of a run and writes them with `manifest.json`.
pub struct Output {
    dir: PathBuf,
    inputs: BTreeMap<String, Entry>,
    outputs: BTreeMap<String, Vec<u8>>,
    grid: Option<serde_json::Value>,
}

impl Output {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), inputs: BTreeMap::new(), outputs: BTreeMap::new(), grid: None }
    }

    pub fn input(&mut self, label: &str, bytes: &[u8]) {
        self.inputs.insert(label.to_string(), Entry { sha256: sha256_hex(bytes), bytes: bytes.len() });
    }

    pub fn input_file(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.input(&name, &bytes);
        Ok(())
    }

    pub fn grid(&mut self, grid: impl Serialize) {
        self.grid = serde_json::to_value(grid).ok();
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.outputs.insert(name.to_string(), bytes);
    }

    pub fn add_json(&mut self, name: &str, value: &impl Serialize) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serialisable report");
        bytes.push(b'\n');
        self.add(name, bytes);
    }

    pub fn finish(self, command: &str, level: &str, seed: u64) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Config(format!("cannot create output dir {}: {e}", self.dir.display())))?;
        let mut outputs = BTreeMap::new();
        for (name, bytes) in &self.outputs {
            let path = self.dir.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
            outputs.insert(name.clone(), Entry { sha256: sha256_hex(bytes), bytes: bytes.len() });
        }
        let manifest = Manifest { command, level, seed, grid: self.grid, inputs: self.inputs, outputs };
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serialisable manifest");
        bytes.push(b'\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, bytes).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
