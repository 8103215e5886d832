//! Per-(mesh, source) cache of exact window fields, in memory and optionally
//! on disk.
//!
//! File layout, all little-endian:
//!
//! ```text
//! 0   4   magic "FPGD"
//! 4   4   u32 format version (1)
//! 8   64  mesh content hash, ASCII hex
//! 72  8   u64 source vertex id
//! 80  8   u64 vertex count V
//! 88  8   u64 window count W
//! 96  8   f64 horizon
//! 104 8V  f64 vertex distances
//! ..  48W f64 windows as (edge, b0, b1, px, py, sigma), edges ascending
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use crate::mesh::{TriMesh, VertexId};

use super::{propagate, GeodesicError, WindowField, WindowRecord};

pub const CACHE_MAGIC: &[u8; 4] = b"FPGD";
const VERSION: u32 = 1;
const HEADER: usize = 104;

type Key = (String, VertexId);

/// Thread-safe: lookups take a read lock, insertions a write lock.
#[derive(Debug, Default)]
pub struct GeodesicCache {
    dir: Option<PathBuf>,
    entries: RwLock<HashMap<Key, Arc<WindowField>>>,
}

impl GeodesicCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        GeodesicCache {
            dir: Some(dir.into()),
            entries: RwLock::default(),
        }
    }

    /// Uses `FATPAD_CACHE_DIR` when set.
    pub fn from_env() -> Self {
        match std::env::var_os("FATPAD_CACHE_DIR") {
            Some(d) if !d.is_empty() => Self::with_dir(d),
            _ => Self::in_memory(),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn file_path(&self, hash: &str, source: VertexId) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("geo-{}-{source}.bin", &hash[..16])))
    }

    /// Exact unbounded field from `source`, solving on a miss.
    pub fn get_or_solve(&self, mesh: &TriMesh, source: VertexId) -> Result<Arc<WindowField>, GeodesicError> {
        self.get_or_solve_within(mesh, source, f64::INFINITY)
    }

    /// Field from `source` that is exact at least up to `radius`. A cached
    /// field with a smaller horizon is replaced.
    pub fn get_or_solve_within(&self, mesh: &TriMesh, source: VertexId, radius: f64) -> Result<Arc<WindowField>, GeodesicError> {
        if source >= mesh.vertex_count() {
            return Err(GeodesicError::InvalidSource(source, mesh.vertex_count()));
        }
        let hash = mesh.content_hash();
        let key = (hash.clone(), source);
        if let Some(f) = self.entries.read().expect("cache lock").get(&key) {
            if f.horizon() >= radius {
                return Ok(f.clone());
            }
        }
        let path = self.file_path(&hash, source);
        let from_disk = path.as_ref().filter(|p| p.exists()).and_then(|p| match read_field(p, mesh, &hash, source) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("ignoring unreadable geodesic cache {}: {e}", p.display());
                None
            }
        });
        let field = match from_disk {
            Some(f) if f.horizon() >= radius => f,
            _ => {
                let f = propagate(mesh, source, radius);
                if let Some(path) = &path {
                    if let Err(e) = write_field(path, &f, &hash, source) {
                        log::warn!("could not write geodesic cache {}: {e}", path.display());
                    }
                }
                f
            }
        };
        let field = Arc::new(field);
        let mut w = self.entries.write().expect("cache lock");
        let slot = w.entry(key).or_insert_with(|| field.clone());
        if slot.horizon() < field.horizon() {
            *slot = field;
        }
        Ok(slot.clone())
    }
}

pub fn encode_field(field: &WindowField, hash: &str, source: VertexId) -> Vec<u8> {
    let n = field.vertex_distances.len();
    let w = field.window_count();
    let mut out = Vec::with_capacity(HEADER + 8 * n + 48 * w);
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let mut h = [b'0'; 64];
    let hb = hash.as_bytes();
    h[..hb.len().min(64)].copy_from_slice(&hb[..hb.len().min(64)]);
    out.extend_from_slice(&h);
    out.extend_from_slice(&(source as u64).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(w as u64).to_le_bytes());
    out.extend_from_slice(&field.horizon.to_le_bytes());
    for d in &field.vertex_distances {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for (e, list) in field.edge_windows.iter().enumerate() {
        for r in list {
            for x in [e as f64, r.b0, r.b1, r.px, r.py, r.sigma] {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_field(bytes: &[u8], mesh: &TriMesh, hash: &str, source: VertexId) -> Result<WindowField, GeodesicError> {
    let bad = |m: &str| GeodesicError::Cache(m.to_string());
    if bytes.len() < HEADER || &bytes[..4] != CACHE_MAGIC {
        return Err(bad("bad magic"));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32::from_le_bytes(bytes[4..8].try_into().unwrap()) != VERSION {
        return Err(bad("unsupported version"));
    }
    if &bytes[8..72] != hash.as_bytes() {
        return Err(bad("mesh hash mismatch"));
    }
    if u64_at(72) as usize != source {
        return Err(bad("source mismatch"));
    }
    let n = u64_at(80) as usize;
    let w = u64_at(88) as usize;
    if n != mesh.vertex_count() || bytes.len() != HEADER + 8 * n + 48 * w {
        return Err(bad("size mismatch"));
    }
    let horizon = f64_at(96);
    let dist = (0..n).map(|i| f64_at(HEADER + 8 * i)).collect();
    let edge_count = mesh.topology().edge_count();
    let mut edge_windows = vec![Vec::new(); edge_count];
    let base = HEADER + 8 * n;
    for i in 0..w {
        let o = base + 48 * i;
        let e = f64_at(o);
        if !(e >= 0.0 && (e as usize) < edge_count && e.fract() == 0.0) {
            return Err(bad("window edge out of range"));
        }
        edge_windows[e as usize].push(WindowRecord {
            b0: f64_at(o + 8),
            b1: f64_at(o + 16),
            px: f64_at(o + 24),
            py: f64_at(o + 32),
            sigma: f64_at(o + 40),
        });
    }
    Ok(WindowField::from_parts(mesh, dist, edge_windows, horizon))
}

fn write_field(path: &Path, field: &WindowField, hash: &str, source: VertexId) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    // write-then-rename so concurrent readers never see a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, encode_field(field, hash, source))?;
    std::fs::rename(tmp, path)
}

fn read_field(path: &Path, mesh: &TriMesh, hash: &str, source: VertexId) -> Result<WindowField, GeodesicError> {
    let bytes = std::fs::read(path).map_err(|e| GeodesicError::Cache(e.to_string()))?;
    decode_field(&bytes, mesh, hash, source)
}
