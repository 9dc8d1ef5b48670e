use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fsio;

/// Record of one CLI run: what went in, what came out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    /// Input path to SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub wall_time_secs: f64,
    pub outputs: BTreeMap<String, String>,
}

/// Collects digests while a command runs.
#[derive(Debug)]
pub struct ManifestBuilder {
    manifest: RunManifest,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: BTreeMap<String, String>, seed: u64) -> Self {
        ManifestBuilder {
            manifest: RunManifest {
                command: command.to_string(),
                config,
                inputs: BTreeMap::new(),
                seed,
                wall_time_secs: 0.0,
                outputs: BTreeMap::new(),
            },
            started: Instant::now(),
        }
    }

    /// Digests a file, or every regular file directly inside a directory.
    fn digests(path: &Path) -> Result<Vec<(String, String)>> {
        if path.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| crate::Error::io(path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != "manifest.json"))
                .collect();
            files.sort();
            files
                .iter()
                .map(|f| Ok((f.display().to_string(), fsio::sha256_hex(&fsio::read_bytes(f)?))))
                .collect()
        } else {
            Ok(vec![(path.display().to_string(), fsio::sha256_hex(&fsio::read_bytes(path)?))])
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest.inputs.extend(Self::digests(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.manifest.outputs.extend(Self::digests(path)?);
        Ok(())
    }

    /// Stamps the wall time and publishes the manifest atomically.
    pub fn finish(mut self, path: &Path) -> Result<RunManifest> {
        self.manifest.wall_time_secs = self.started.elapsed().as_secs_f64();
        let mut json = serde_json::to_string_pretty(&self.manifest)?;
        json.push('\n');
        fsio::write_atomic(path, json.as_bytes())?;
        Ok(self.manifest)
    }
}

/// `D/manifest.json` for directory outputs, `F.manifest.json` otherwise.
pub fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("manifest.json")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }
}
