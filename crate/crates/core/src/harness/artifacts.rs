use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;

pub const MANIFEST_FILE: &str = "manifest.json";
/// Wall-clock details of the producing run, kept out of the hashed files.
pub const RUN_INFO_FILE: &str = "run_info.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub files: Vec<ManifestEntry>,
    /// Listed but not hashed: their content changes between reruns.
    pub volatile: Vec<String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Option<Manifest>, HarnessError> {
        let p = dir.join(MANIFEST_FILE);
        if !p.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&p).map_err(|e| io(&p, e))?;
        serde_json::from_str(&text).map(Some).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))
    }

    fn owned_paths(&self) -> impl Iterator<Item = &str> {
        self.files
            .iter()
            .map(|f| f.path.as_str())
            .chain(self.volatile.iter().map(String::as_str))
            .chain(std::iter::once(MANIFEST_FILE))
    }
}

pub(crate) fn io(p: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", p.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files collected in memory and written in one pass once every run of
/// the plan has finished.
#[derive(Debug, Default)]
pub struct ArtifactSet {
    files: BTreeMap<String, Vec<u8>>,
}

impl ArtifactSet {
    pub fn put(&mut self, rel: impl Into<String>, content: impl Into<Vec<u8>>) {
        let rel = rel.into();
        let prev = self.files.insert(rel.clone(), content.into());
        debug_assert!(prev.is_none(), "artifact {rel} written twice");
    }

    pub fn append(&mut self, rel: &str, content: &[u8]) {
        self.files.entry(rel.to_string()).or_default().extend_from_slice(content);
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    /// Writes every file, then `manifest.json` and the run-info file.
    pub fn commit(self, dir: &Path, config_hash: &str, run_info: &str) -> Result<Manifest, HarnessError> {
        if let Some(old) = Manifest::load(dir)? {
            for p in old.owned_paths() {
                let full = dir.join(p);
                if full.is_file() {
                    fs::remove_file(&full).map_err(|e| io(&full, e))?;
                }
            }
        }
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut entries = Vec::with_capacity(self.files.len());
        for (rel, bytes) in &self.files {
            let full = dir.join(rel);
            if let Some(parent) = full.parent() {
                fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
            }
            fs::write(&full, bytes).map_err(|e| io(&full, e))?;
            entries.push(ManifestEntry { path: rel.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
        }
        let manifest = Manifest {
            config_hash: config_hash.to_string(),
            files: entries,
            volatile: vec![RUN_INFO_FILE.to_string()],
        };
        let info = dir.join(RUN_INFO_FILE);
        fs::write(&info, run_info).map_err(|e| io(&info, e))?;
        let mp = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
        fs::write(&mp, text).map_err(|e| io(&mp, e))?;
        Ok(manifest)
    }
}

/// Files under `dir` (relative, `/`-separated) not owned by a previous
/// manifest. A plan refuses to write into a directory holding any.
pub fn foreign_files(dir: &Path) -> Result<Vec<String>, HarnessError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    if !dir.is_dir() {
        return Err(HarnessError::Config(format!("{} is not a directory", dir.display())));
    }
    let owned: Vec<String> =
        Manifest::load(dir)?.map(|m| m.owned_paths().map(String::from).collect()).unwrap_or_default();
    let mut out = Vec::new();
    let mut stack: Vec<PathBuf> = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| io(&d, e))? {
            let p = entry.map_err(|e| io(&d, e))?.path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = relative(dir, &p);
            if !owned.contains(&rel) {
                out.push(rel);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn relative(root: &Path, p: &Path) -> String {
    let rel = p.strip_prefix(root).unwrap_or(p);
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}
