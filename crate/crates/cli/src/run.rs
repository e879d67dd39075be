//! One output directory per run, with a manifest written before any artifact.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::Utc;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    args: &'a [String],
    started: String,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    inputs: &'a [FileDigest],
    config: &'a RunConfig,
    outputs: &'a [FileDigest],
}

pub struct Run {
    pub dir: PathBuf,
    command: String,
    args: Vec<String>,
    started: String,
    inputs: Vec<FileDigest>,
    config: RunConfig,
    outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// `root/<command>-<UTC timestamp>`, suffixed if that name is taken.
fn fresh_dir(root: &Path, command: &str) -> Result<PathBuf> {
    let stamp = Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let base = root.join(format!("{command}-{stamp}"));
    let mut dir = base.clone();
    let mut n = 1;
    while dir.exists() {
        dir = PathBuf::from(format!("{}-{n}", base.display()));
        n += 1;
    }
    Ok(dir)
}

impl Run {
    /// Hash the inputs, create the directory and write the manifest.
    pub fn start(
        root: &Path,
        explicit: Option<&Path>,
        command: &str,
        inputs: &[&Path],
        config: &RunConfig,
    ) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| Ok(FileDigest { path: p.display().to_string(), sha256: sha256_file(p)? }))
            .collect::<Result<Vec<_>>>()?;
        let dir = match explicit {
            Some(d) => d.to_path_buf(),
            None => fresh_dir(root, command)?,
        };
        fs::create_dir_all(&dir).with_context(|| format!("creating run directory {}", dir.display()))?;
        let run = Self {
            dir,
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            started: Utc::now().to_rfc3339(),
            inputs,
            config: config.clone(),
            outputs: Vec::new(),
        };
        run.write_manifest("running", None)?;
        Ok(run)
    }

    fn write_manifest(&self, status: &str, error: Option<&str>) -> Result<()> {
        let m = Manifest {
            tool: "rbcplan",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            args: &self.args,
            started: self.started.clone(),
            status,
            error,
            inputs: &self.inputs,
            config: &self.config,
            outputs: &self.outputs,
        };
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&m)? + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Create an artifact, fill it with `write`, and record its digest.
    pub fn artifact(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<PathBuf> {
        let path = self.path(name);
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        w.flush()?;
        drop(w);
        self.outputs.push(FileDigest { path: name.to_string(), sha256: sha256_file(&path)? });
        Ok(path)
    }

    pub fn json_artifact<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.artifact(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn finish(self) -> Result<PathBuf> {
        self.write_manifest("ok", None)?;
        Ok(self.dir)
    }

    pub fn fail(&self, message: &str) {
        let _ = self.write_manifest("failed", Some(message));
    }
}
