//! Output directories and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use pauliest::{Error, Result, GENERATOR_NAME, VERSION};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub rng: String,
    pub threads: usize,
    pub started_at: String,
    pub finished_at: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputDigest>,
    /// Wall-clock measurements; everything else in the run is reproducible.
    pub timing: serde_json::Value,
}

/// A directory that collects the files of one run.
pub struct RunDir {
    path: PathBuf,
    written: Vec<OutputDigest>,
    started: DateTime<Utc>,
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunDir {
    /// A fresh `runs/<subcommand>-<timestamp>` directory, or `out` if given.
    /// An existing non-empty `out` is only reused with `force`.
    pub fn create(subcommand: &str, out: Option<&Path>, force: bool) -> Result<Self> {
        let started = Utc::now();
        let path = match out {
            Some(dir) => {
                let occupied = dir.is_dir() && fs::read_dir(dir)?.next().is_some();
                if occupied && !force {
                    return Err(Error::InvalidParameter(format!(
                        "output directory {} is not empty; pass --force to overwrite",
                        dir.display()
                    )));
                }
                dir.to_path_buf()
            }
            None => {
                let base = format!("{subcommand}-{}", started.format("%Y%m%dT%H%M%S%.3fZ"));
                let root = Path::new("runs");
                let mut candidate = root.join(&base);
                let mut k = 1;
                while candidate.exists() {
                    candidate = root.join(format!("{base}-{k}"));
                    k += 1;
                }
                candidate
            }
        };
        fs::create_dir_all(&path)?;
        Ok(RunDir {
            path,
            written: Vec::new(),
            started,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    /// Records the digest of a file already written into the directory.
    pub fn track(&mut self, name: &str) -> Result<()> {
        let bytes = fs::read(self.file(name))?;
        self.written.push(OutputDigest {
            file: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        fs::write(self.file(name), contents)?;
        self.track(name)
    }

    pub fn finish(
        self,
        subcommand: &str,
        config: &ExperimentConfig,
        timing: serde_json::Value,
    ) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: "pauliest".into(),
            version: VERSION.into(),
            subcommand: subcommand.into(),
            argv: std::env::args().collect(),
            rng: GENERATOR_NAME.into(),
            threads: rayon::current_num_threads(),
            started_at: stamp(self.started),
            finished_at: stamp(Utc::now()),
            config: config.clone(),
            outputs: self.written,
            timing,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(self.path.join(MANIFEST_FILE), text + "\n")?;
        Ok(manifest)
    }
}

/// Recomputes every digest listed in a manifest.
pub fn verify(dir: &Path) -> Result<bool> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    for out in &manifest.outputs {
        let bytes = fs::read(dir.join(&out.file))?;
        if hex::encode(Sha256::digest(&bytes)) != out.sha256 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digests_match_written_files() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        let mut run = RunDir::create("test", Some(&out), false).unwrap();
        run.write("a.txt", b"abc").unwrap();
        let m = run
            .finish("test", &ExperimentConfig::default(), serde_json::json!({}))
            .unwrap();
        assert_eq!(
            m.outputs[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(verify(&out).unwrap());
        fs::write(out.join("a.txt"), b"abd").unwrap();
        assert!(!verify(&out).unwrap());
    }

    #[test]
    fn occupied_directory_needs_force() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("x"), b"1").unwrap();
        assert!(RunDir::create("t", Some(tmp.path()), false).is_err());
        assert!(RunDir::create("t", Some(tmp.path()), true).is_ok());
    }
}
