//! Per-run provenance record written next to the artifacts it describes.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// Fully resolved configuration of the command.
    pub config: serde_json::Value,
    pub inputs: Vec<InputHash>,
    /// Artifacts written, relative to the output directory when inside it.
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub wall_seconds: f64,
    pub warnings: Vec<String>,
    /// Set when the command failed.
    pub error: Option<String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Collects the manifest while a command runs.
pub struct RunRecorder {
    out_dir: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl RunRecorder {
    pub fn start(out_dir: &Path, command: &str, argv: Vec<String>) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            manifest: RunManifest {
                command: command.into(),
                argv,
                config: serde_json::Value::Null,
                inputs: Vec::new(),
                outputs: Vec::new(),
                seed: None,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                started_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
                finished_at: String::new(),
                wall_seconds: 0.0,
                warnings: Vec::new(),
                error: None,
            },
            started: Instant::now(),
        }
    }

    /// File name of the manifest inside the output directory.
    pub fn file_name(&self) -> String {
        format!("{}.manifest.json", self.manifest.command)
    }

    pub fn set_config<T: Serialize>(&mut self, config: &T) -> Result<()> {
        self.manifest.config = serde_json::to_value(config)?;
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        self.manifest.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        let shown = path.strip_prefix(&self.out_dir).unwrap_or(path);
        self.manifest.outputs.push(shown.display().to_string());
    }

    pub fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.manifest.warnings.push(message);
    }

    pub fn warnings(&self) -> &[String] {
        &self.manifest.warnings
    }

    pub fn fail(&mut self, error: String) {
        self.manifest.error = Some(error);
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.finished_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
        self.manifest.wall_seconds = self.started.elapsed().as_secs_f64();
        // a failed run must not replace the record of the run that made the artifacts
        let name = if self.manifest.error.is_some() {
            format!("{}.failed.manifest.json", self.manifest.command)
        } else {
            self.file_name()
        };
        let path = self.out_dir.join(name);
        write_json(&path, &self.manifest)?;
        Ok(self.manifest)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn outputs_are_relative_to_out_dir() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = RunRecorder::start(dir.path(), "train", vec![]);
        r.output(&dir.path().join("model.ckpt"));
        r.output(Path::new("/elsewhere/x.json"));
        let m = r.finish().unwrap();
        assert_eq!(m.outputs, vec!["model.ckpt", "/elsewhere/x.json"]);
        assert!(dir.path().join("train.manifest.json").exists());
        assert!(m.wall_seconds >= 0.0);

        let mut r = RunRecorder::start(dir.path(), "train", vec![]);
        r.fail("boom".into());
        r.finish().unwrap();
        assert!(dir.path().join("train.failed.manifest.json").exists());
    }
}
