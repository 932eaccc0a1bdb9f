//! Atomic artifact writes and run manifests.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

/// Buffered writer over a stage's temporary file.
pub type Sink = BufWriter<NamedTempFile>;

/// Outputs of one stage. Files appear under their final name only once
/// fully written; [`StageOutputs::rollback`] removes everything the stage
/// has produced so far.
#[derive(Debug)]
pub struct StageOutputs {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl StageOutputs {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf(), written: Vec::new() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    /// Writes `rel` through a temporary file in the same directory.
    pub fn write(&mut self, rel: &Path, fill: impl FnOnce(&mut Sink) -> Result<()>) -> Result<()> {
        let path = self.root.join(rel);
        let dir = path.parent().expect("artifact paths have a parent");
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let tmp = NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
        let mut w = BufWriter::new(tmp);
        fill(&mut w)?;
        let tmp = w.into_inner().map_err(|e| e.into_error())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).with_context(|| format!("renaming into {}", path.display()))?;
        self.written.push(rel.to_path_buf());
        Ok(())
    }

    pub fn write_bytes(&mut self, rel: &Path, bytes: &[u8]) -> Result<()> {
        self.write(rel, |w| Ok(w.write_all(bytes)?))
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn rollback(&mut self) {
        for rel in self.written.drain(..) {
            let _ = fs::remove_file(self.root.join(rel));
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

/// What a stage ran with and what it produced. No wall-clock fields, so a
/// rerun with the same inputs writes the same manifest.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub stage: String,
    pub seed: u64,
    pub config_sha256: String,
    pub jumpcast_version: String,
    pub outputs: Vec<OutputRecord>,
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let mut f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut h = Sha256::new();
    std::io::copy(&mut f, &mut h)?;
    Ok(hex::encode(h.finalize()))
}

/// Forward-slash relative path, stable across platforms.
pub fn display_rel(rel: &Path) -> String {
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

/// `day_007` style file name.
pub fn day_file(dir: &Path, day: u32, ext: &str) -> PathBuf {
    dir.join(format!("day_{day:03}.{ext}"))
}
