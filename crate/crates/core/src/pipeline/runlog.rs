use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineConfig, PipelineError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// File name relative to the output or input directory it came from.
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, PipelineError> {
        let data = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
        Ok(Self::of_bytes(&short_name(path), &data))
    }

    pub fn of_bytes(name: &str, data: &[u8]) -> Self {
        FileDigest {
            name: name.to_string(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(data)),
        }
    }
}

fn short_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Record of one command invocation. It holds no timestamps or absolute
/// paths, so identical runs produce identical logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub counts: BTreeMap<String, f64>,
}

impl RunLog {
    pub fn new(command: &str, cfg: &PipelineConfig) -> Self {
        RunLog {
            command: command.to_string(),
            config_sha256: cfg.digest(),
            seed: cfg.seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            counts: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), PipelineError> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn count(&mut self, key: &str, value: impl Into<f64>) {
        self.counts.insert(key.to_string(), value.into());
    }

    /// Writes `data` to `path`, creating parent directories, and records it.
    pub fn write(&mut self, path: &Path, data: &str) -> Result<(), PipelineError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        }
        std::fs::write(path, data).map_err(|e| PipelineError::io(path, e))?;
        self.outputs.push(FileDigest::of_bytes(&short_name(path), data.as_bytes()));
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run logs always serialize")
    }

    /// Writes `runlog-<command>.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        let path = dir.join(format!("runlog-{}.json", self.command));
        std::fs::write(&path, self.to_json()).map_err(|e| PipelineError::io(&path, e))
    }
}
