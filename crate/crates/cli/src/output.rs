//! Output staging and the per-run manifest.
//!
//! Files are first written to a hidden staging directory inside the target
//! directory and moved into place only after every output was produced, so a
//! failing command leaves no partial results behind.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_SCHEMA: &str = "fedsurv-run-manifest/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: impl Into<String>, content: &[u8]) -> Self {
        FileDigest {
            path: path.into(),
            sha256: hex::encode(Sha256::digest(content)),
            bytes: content.len() as u64,
        }
    }

    pub fn of_file(path: &Path) -> anyhow::Result<Self> {
        let content = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        Ok(Self::of(path.display().to_string(), &content))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub path: String,
    pub reason: String,
}

/// Reproducibility record written next to a command's outputs. See
/// `docs/manifest.md` for the field reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub command_line: Vec<String>,
    /// Resolved flag set; valid as a `--config` file for the same command.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory, sorted.
    pub outputs: Vec<FileDigest>,
    #[serde(default)]
    pub skipped: Vec<Skipped>,
    pub duration_seconds: f64,
}

pub struct RunInfo {
    pub command: &'static str,
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub started: Instant,
}

pub struct StagedOutput {
    target: PathBuf,
    staging: PathBuf,
    created_target: bool,
    files: Vec<FileDigest>,
    committed: bool,
}

impl StagedOutput {
    pub fn new(target: &Path) -> anyhow::Result<Self> {
        let created_target = !target.exists();
        fs::create_dir_all(target)
            .with_context(|| format!("cannot create output directory {}", target.display()))?;
        let staging = target.join(format!(".fedsurv-staging-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)
                .with_context(|| format!("cannot clear {}", staging.display()))?;
        }
        let out = StagedOutput {
            target: target.to_path_buf(),
            staging,
            created_target,
            files: Vec::new(),
            committed: false,
        };
        fs::create_dir(&out.staging)
            .with_context(|| format!("cannot create {}", out.staging.display()))?;
        Ok(out)
    }

    pub fn write(&mut self, name: &str, content: &[u8]) -> anyhow::Result<()> {
        if self.files.iter().any(|f| f.path == name) {
            anyhow::bail!("output {name} produced twice");
        }
        let path = self.staging.join(name);
        fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(FileDigest::of(name, content));
        Ok(())
    }

    /// Writes the manifest and moves every staged file into the target
    /// directory.
    pub fn commit(
        mut self,
        manifest_name: &str,
        info: RunInfo,
        skipped: Vec<Skipped>,
    ) -> anyhow::Result<RunManifest> {
        let mut outputs = self.files.clone();
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA.to_string(),
            tool: "fedsurv".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: info.command.to_string(),
            command_line: info.command_line,
            config: info.config,
            seed: info.seed,
            inputs: info.inputs,
            outputs,
            skipped,
            duration_seconds: info.started.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.staging.join(manifest_name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;

        let names = self
            .files
            .iter()
            .map(|f| f.path.clone())
            .chain(std::iter::once(manifest_name.to_string()));
        for name in names {
            let (from, to) = (self.staging.join(&name), self.target.join(&name));
            fs::rename(&from, &to)
                .with_context(|| format!("cannot move output to {}", to.display()))?;
        }
        self.committed = true;
        fs::remove_dir(&self.staging).ok();
        Ok(manifest)
    }
}

impl Drop for StagedOutput {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        fs::remove_dir_all(&self.staging).ok();
        if self.created_target {
            // only succeeds if nothing else was put there meanwhile
            fs::remove_dir(&self.target).ok();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info() -> RunInfo {
        RunInfo {
            command: "test",
            command_line: vec!["fedsurv".into()],
            config: serde_json::json!({}),
            seed: Some(1),
            inputs: vec![],
            started: Instant::now(),
        }
    }

    #[test]
    fn commit_moves_files_and_lists_them() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out");
        let mut staged = StagedOutput::new(&target).unwrap();
        staged.write("b.csv", b"x\n").unwrap();
        staged.write("a.csv", b"y\n").unwrap();
        let manifest = staged.commit("m.json", info(), vec![]).unwrap();
        let names: Vec<&str> = manifest.outputs.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(names, ["a.csv", "b.csv"]);
        let mut entries: Vec<String> = fs::read_dir(&target)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        entries.sort();
        assert_eq!(entries, ["a.csv", "b.csv", "m.json"]);
        assert_eq!(
            manifest.outputs[0].sha256,
            "3bb2abb69ebb27fbfe63c7639624c6ec5e331b841a5bc8c3ebc10b9285e90877"
        );
    }

    #[test]
    fn dropping_uncommitted_output_removes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out");
        {
            let mut staged = StagedOutput::new(&target).unwrap();
            staged.write("a.csv", b"y\n").unwrap();
        }
        assert!(!target.exists());
    }

    #[test]
    fn existing_directory_is_kept_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("keep.txt"), "k").unwrap();
        {
            let mut staged = StagedOutput::new(dir.path()).unwrap();
            staged.write("a.csv", b"y\n").unwrap();
        }
        let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 1);
    }
}
