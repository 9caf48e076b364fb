//! On-disk cache of assembled models keyed by the hash of the domain and
//! operator sections plus the mesh size.
//!
//! Any unreadable entry (truncated, corrupted, older format version, or
//! assembled for a different mesh) is a miss, and the caller reassembles.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use kreinlab::discretize::cache::{from_bytes, peek_header, to_bytes, Header};
use kreinlab::discretize::{DiscreteModel, EllipticOperatorSpec, Mesh};
use sha2::{Digest, Sha256};

use crate::config::hex;

pub const EXTENSION: &str = "krlb";

#[derive(Clone, Debug)]
pub struct ModelCache {
    pub dir: PathBuf,
}

#[derive(Clone, Debug)]
pub struct CacheEntry {
    pub key: String,
    pub path: PathBuf,
    pub bytes: u64,
    /// `Err` holds the reason the header could not be read.
    pub header: Result<Header, String>,
}

/// Cache key for a model hash and mesh size.
pub fn key(model_hash: &str, h: f64, shift: f64) -> String {
    let mut d = Sha256::new();
    d.update(model_hash.as_bytes());
    d.update(h.to_bits().to_le_bytes());
    d.update(shift.to_bits().to_le_bytes());
    hex(&d.finalize())[..24].to_string()
}

impl ModelCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ModelCache { dir: dir.into() }
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.{EXTENSION}"))
    }

    /// The cached model, or `None` on a miss. Unreadable entries are logged
    /// and treated as misses.
    pub fn get(&self, key: &str, mesh: Arc<Mesh>, op: EllipticOperatorSpec) -> Option<DiscreteModel> {
        let path = self.path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("cache entry {} unreadable: {e}", path.display());
                return None;
            }
        };
        match from_bytes(&bytes, mesh, op) {
            Ok(m) => Some(m),
            Err(e) => {
                log::warn!("cache entry {} ignored: {e}", path.display());
                None
            }
        }
    }

    /// Writes through a temporary file so readers never see a partial entry.
    pub fn put(&self, key: &str, model: &DiscreteModel) -> io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(key);
        let tmp = self.dir.join(format!("{key}.{EXTENSION}.tmp"));
        fs::write(&tmp, to_bytes(model))?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn list(&self) -> io::Result<Vec<CacheEntry>> {
        let mut out = Vec::new();
        if !self.dir.exists() {
            return Ok(out);
        }
        for e in fs::read_dir(&self.dir)? {
            let path = e?.path();
            if path.extension().and_then(|x| x.to_str()) != Some(EXTENSION) {
                continue;
            }
            let bytes = fs::read(&path)?;
            out.push(CacheEntry {
                key: stem(&path),
                bytes: bytes.len() as u64,
                header: peek_header(&bytes).map_err(|e| e.to_string()),
                path,
            });
        }
        out.sort_by(|a, b| a.key.cmp(&b.key));
        Ok(out)
    }

    /// Removes every entry; returns how many were removed.
    pub fn clear(&self) -> io::Result<usize> {
        let mut n = 0;
        if !self.dir.exists() {
            return Ok(0);
        }
        for e in fs::read_dir(&self.dir)? {
            let path = e?.path();
            let ext = path.extension().and_then(|x| x.to_str());
            if ext == Some(EXTENSION) || ext == Some("tmp") {
                fs::remove_file(&path)?;
                n += 1;
            }
        }
        Ok(n)
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string()
}
