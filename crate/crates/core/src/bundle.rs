//! The offline pipeline (map, weights, cages, bindings) and the on-disk
//! project bundle that ties its artifacts together.
//!
//! A bundle directory holds `bundle.json` plus the files it names:
//!
//! ```text
//! bundle.json          manifest with paths and the mesh/map fingerprint
//! mesh.obj             rest mesh, byte copy of the input
//! map.json             fat pad map
//! weights.json         per-handle weights
//! cage_upper.json      cages
//! cage_lower.json
//! binding_upper.bin    Green Coordinates bindings ("FPGC")
//! binding_lower.bin
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attenuation::{build_all_weights, load_weights, save_weights, AttenuationError, AttenuationParams, WeightReport, WeightSet};
use crate::cage::{build_cage, Cage, CageParams};
use crate::fatpad::{load_map, FatPadMap, Region};
use crate::geodesic::GeodesicCache;
use crate::green::{bind, cage_hash, decode_binding, encode_binding, GcBinding};
use crate::mesh::{load_obj, TriMesh};
use crate::pose::{PoseFingerprint, Rig};

pub const BUNDLE_VERSION: u32 = 1;
pub const MANIFEST: &str = "bundle.json";

/// A pipeline failure, tagged with the stage that raised it.
#[derive(Debug, Error)]
#[error("stage {stage}: {message}")]
pub struct BuildError {
    pub stage: &'static str,
    pub message: String,
}

impl BuildError {
    fn new(stage: &'static str, e: impl std::fmt::Display) -> Self {
        BuildError {
            stage,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuildParams {
    pub cage: CageParams,
    pub attenuation: AttenuationParams,
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub mesh: TriMesh,
    pub map: FatPadMap,
    pub weights: WeightSet,
    pub weight_reports: Vec<WeightReport>,
    pub upper: Cage,
    pub lower: Cage,
    pub bindings: [GcBinding; 2],
    pub timings: Vec<(&'static str, Duration)>,
}

/// Binding of `cage`, reused from `cache_dir` when a file for the same mesh
/// and cage exists there.
pub fn bind_cached(mesh: &TriMesh, cage: &Cage, cache_dir: Option<&Path>) -> Result<GcBinding, BuildError> {
    let path = cache_dir.map(|d| {
        let key = format!("gc-{}-{}.bin", &mesh.content_hash()[..16], &cage_hash(&cage.vertices, &cage.triangles)[..16]);
        d.join(key)
    });
    if let Some(p) = path.as_ref().filter(|p| p.exists()) {
        match std::fs::read(p).map_err(|e| e.to_string()).and_then(|b| decode_binding(&b, mesh).map_err(|e| e.to_string())) {
            Ok(b) if b.cage_hash == cage_hash(&cage.vertices, &cage.triangles) => return Ok(b),
            Ok(_) => log::warn!("binding cache {} is for another cage", p.display()),
            Err(e) => log::warn!("ignoring binding cache {}: {e}", p.display()),
        }
    }
    let b = bind(mesh, &cage.vertices, &cage.triangles).map_err(|e| BuildError::new("green-coords", e))?;
    if let Some(p) = path {
        let write = || -> std::io::Result<()> {
            std::fs::create_dir_all(p.parent().expect("cache file has a parent"))?;
            let tmp = p.with_extension(format!("tmp{}", std::process::id()));
            std::fs::write(&tmp, encode_binding(&b))?;
            std::fs::rename(tmp, &p)
        };
        if let Err(e) = write() {
            log::warn!("could not write binding cache {}: {e}", p.display());
        }
    }
    Ok(b)
}

fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os("FATPAD_CACHE_DIR").filter(|d| !d.is_empty()).map(PathBuf::from)
}

/// Run every offline stage on a loaded mesh and a map file.
pub fn build(mesh: TriMesh, map_json: &[u8], params: &BuildParams, cache: &GeodesicCache) -> Result<Artifacts, BuildError> {
    let mut timings = Vec::new();
    let t = Instant::now();
    let map = load_map(map_json, &mesh).map_err(|e| BuildError::new("fatpad-map", e))?;
    timings.push(("fatpad-map", t.elapsed()));

    let t = Instant::now();
    let (weights, weight_reports) = build_all_weights(&mesh, &map, params.attenuation, cache).map_err(|e| match e {
        AttenuationError::Geodesic(g) => BuildError::new("geodesics", g),
        other => BuildError::new("attenuation", other),
    })?;
    timings.push(("geodesics+attenuation", t.elapsed()));

    let t = Instant::now();
    let (upper, lower) = rayon::join(
        || build_cage(&mesh, &map, Region::Upper, &params.cage),
        || build_cage(&mesh, &map, Region::Lower, &params.cage),
    );
    let upper = upper.map_err(|e| BuildError::new("cage-builder", e))?;
    let lower = lower.map_err(|e| BuildError::new("cage-builder", e))?;
    timings.push(("cage-builder", t.elapsed()));

    let t = Instant::now();
    let dir = cache_dir_from_env();
    let bu = bind_cached(&mesh, &upper, dir.as_deref())?;
    let bl = bind_cached(&mesh, &lower, dir.as_deref())?;
    timings.push(("green-coords", t.elapsed()));

    Ok(Artifacts {
        mesh,
        map,
        weights,
        weight_reports,
        upper,
        lower,
        bindings: [bu, bl],
        timings,
    })
}

impl Artifacts {
    pub fn into_rig(self) -> Result<Rig, BuildError> {
        Rig::new(self.mesh, self.map, self.upper, self.lower, self.bindings, self.weights).map_err(|e| BuildError::new("bundle", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionPaths {
    pub upper: String,
    pub lower: String,
}

/// `bundle.json`. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub fingerprint: PoseFingerprint,
    pub mesh: String,
    pub map: String,
    pub weights: String,
    pub cages: RegionPaths,
    pub bindings: RegionPaths,
}

impl Manifest {
    pub fn standard(fingerprint: PoseFingerprint) -> Self {
        Manifest {
            version: BUNDLE_VERSION,
            fingerprint,
            mesh: "mesh.obj".into(),
            map: "map.json".into(),
            weights: "weights.json".into(),
            cages: RegionPaths {
                upper: "cage_upper.json".into(),
                lower: "cage_lower.json".into(),
            },
            bindings: RegionPaths {
                upper: "binding_upper.bin".into(),
                lower: "binding_lower.bin".into(),
            },
        }
    }
}

/// Write all artifacts into `dir`. `mesh_bytes` is copied verbatim so the
/// bundle's mesh hashes exactly like the input.
pub fn write_bundle(dir: &Path, mesh_bytes: &[u8], art: &Artifacts) -> std::io::Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest::standard(PoseFingerprint {
        mesh: art.mesh.content_hash(),
        map: art.map.map_hash(),
    });
    let files: [(&str, Vec<u8>); 7] = [
        (&manifest.mesh, mesh_bytes.to_vec()),
        (&manifest.map, art.map.to_json()),
        (&manifest.weights, save_weights(&art.weights)),
        (&manifest.cages.upper, art.upper.to_json()),
        (&manifest.cages.lower, art.lower.to_json()),
        (&manifest.bindings.upper, encode_binding(&art.bindings[0])),
        (&manifest.bindings.lower, encode_binding(&art.bindings[1])),
    ];
    for (name, bytes) in files {
        std::fs::write(dir.join(name), bytes)?;
    }
    std::fs::write(dir.join(MANIFEST), serde_json::to_vec_pretty(&manifest).expect("manifest serializes"))?;
    Ok(manifest)
}

/// Load a bundle from its directory or its manifest path. Every artifact is
/// checked against the manifest fingerprint before anything is returned.
pub fn load_bundle(path: &Path) -> Result<Rig, BuildError> {
    let manifest_path = if path.is_dir() { path.join(MANIFEST) } else { path.to_path_buf() };
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let stage = "bundle";
    let read = |name: &str| std::fs::read(dir.join(name)).map_err(|e| BuildError::new(stage, format!("{name}: {e}")));
    let manifest: Manifest = serde_json::from_slice(&read(manifest_path.file_name().and_then(|n| n.to_str()).unwrap_or(MANIFEST))?)
        .map_err(|e| BuildError::new(stage, format!("manifest: {e}")))?;
    if manifest.version != BUNDLE_VERSION {
        return Err(BuildError::new(stage, format!("unsupported bundle version {}", manifest.version)));
    }
    let mesh = load_obj(&read(&manifest.mesh)?).map_err(|e| BuildError::new("mesh-core", e))?;
    if mesh.content_hash() != manifest.fingerprint.mesh {
        return Err(BuildError::new(stage, "mesh does not match the manifest fingerprint"));
    }
    let map = load_map(&read(&manifest.map)?, &mesh).map_err(|e| BuildError::new("fatpad-map", e))?;
    if map.map_hash() != manifest.fingerprint.map {
        return Err(BuildError::new(stage, "map does not match the manifest fingerprint"));
    }
    let weights = load_weights(&read(&manifest.weights)?, &mesh, &map).map_err(|e| BuildError::new("attenuation", e))?;
    let cage = |p: &str| Cage::from_json(&read(p)?).map_err(|e| BuildError::new("cage-builder", e));
    let (upper, lower) = (cage(&manifest.cages.upper)?, cage(&manifest.cages.lower)?);
    let binding = |p: &str| decode_binding(&read(p)?, &mesh).map_err(|e| BuildError::new("green-coords", e));
    let bindings = [binding(&manifest.bindings.upper)?, binding(&manifest.bindings.lower)?];
    Rig::new(mesh, map, upper, lower, bindings, weights).map_err(|e| BuildError::new(stage, e))
}

pub fn load_bundle_shared(path: &Path) -> Result<Arc<Rig>, BuildError> {
    load_bundle(path).map(Arc::new)
}
