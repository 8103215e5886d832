//! Fat pad maps: overlapping vertex regions with handles, movable borders and
//! an upper/lower cage tag, bound to one mesh topology.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::mesh::{TriMesh, VertexId};

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("invalid map JSON: {0}")]
    Json(String),
    #[error("map was authored for a different mesh topology (map {expected}, mesh {found})")]
    TopologyMismatch { expected: String, found: String },
    #[error("pad {pad}: vertex {vertex} out of range ({count} vertices)")]
    VertexOutOfRange { pad: String, vertex: usize, count: usize },
    #[error("duplicate pad id {0}")]
    DuplicatePad(String),
    #[error("duplicate handle id {0}")]
    DuplicateHandle(String),
    #[error("pad {0} has no vertices")]
    EmptyPad(String),
    #[error("pad {0} has no handles")]
    NoHandles(String),
    #[error("pad {pad}: handle {handle} anchor {anchor} is not a pad vertex")]
    AnchorNotInPad { pad: String, handle: String, anchor: VertexId },
    #[error("pad {pad}: handle {handle} anchor {anchor} lies on the pad border")]
    AnchorOnBorder { pad: String, handle: String, anchor: VertexId },
    #[error("pad {pad}: movable_border vertex {vertex} is not on the pad border")]
    MovableNotOnBorder { pad: String, vertex: VertexId },
    #[error("pad {pad}: non-manifold border at vertices {vertices:?}")]
    NonManifoldBorder { pad: String, vertices: Vec<VertexId> },
    #[error("unknown pad {0}")]
    UnknownPad(String),
    #[error("unknown handle {0}")]
    UnknownHandle(String),
    #[error("axis_mask of handle {0} must have a positive entry and no negative ones")]
    BadAxisMask(String),
}

/// Which of the two cages a pad belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Upper,
    Lower,
}

impl Region {
    pub const ALL: [Region; 2] = [Region::Upper, Region::Lower];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Upper => "upper",
            Region::Lower => "lower",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Handle {
    pub id: String,
    pub pad_id: String,
    pub anchor: VertexId,
    pub rest_position: Vec3,
    /// Per-axis scaling of the normal used when offsetting this handle's cage
    /// vertex; `None` means the plain normal.
    pub axis_mask: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FatPad {
    pub id: String,
    pub region: Region,
    /// Sorted, unique.
    pub vertices: Vec<VertexId>,
    pub handles: Vec<String>,
    /// Sorted, unique; subset of `border`.
    pub movable_border: Vec<VertexId>,
    /// Pad vertices with a neighbour outside the pad or on the mesh boundary. Sorted.
    pub border: Vec<VertexId>,
}

impl FatPad {
    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn is_border(&self, v: VertexId) -> bool {
        self.border.binary_search(&v).is_ok()
    }

    pub fn is_movable_border(&self, v: VertexId) -> bool {
        self.movable_border.binary_search(&v).is_ok()
    }
}

/// Topology identity of the mesh a map was authored on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapFingerprint {
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub topology: String,
}

impl MapFingerprint {
    pub fn of(mesh: &TriMesh) -> Self {
        MapFingerprint {
            vertex_count: mesh.vertex_count(),
            triangle_count: mesh.triangle_count(),
            topology: mesh.topology_fingerprint(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandleSpec {
    pub id: String,
    pub anchor: VertexId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_mask: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PadSpec {
    pub id: String,
    pub region: Region,
    pub vertices: Vec<VertexId>,
    #[serde(default)]
    pub movable_border: Vec<VertexId>,
    pub handles: Vec<HandleSpec>,
}

/// On-disk form of a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub fingerprint: MapFingerprint,
    pub pads: Vec<PadSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FatPadMap {
    pub fingerprint: MapFingerprint,
    pub pads: Vec<FatPad>,
    pub handles: Vec<Handle>,
    pad_index: HashMap<String, usize>,
    handle_index: HashMap<String, usize>,
}

/// Pad vertices adjacent to a non-pad vertex or lying on the mesh boundary.
pub fn compute_border(mesh: &TriMesh, vertices: &[VertexId]) -> Vec<VertexId> {
    let topo = mesh.topology();
    let inside: HashSet<VertexId> = vertices.iter().copied().collect();
    let mut border: Vec<VertexId> = vertices
        .iter()
        .copied()
        .filter(|&v| topo.is_boundary_vertex(v) || topo.neighbors(v).iter().any(|n| !inside.contains(n)))
        .collect();
    border.sort_unstable();
    border.dedup();
    border
}

fn sorted_unique(v: &[VertexId]) -> Vec<VertexId> {
    let s: BTreeSet<VertexId> = v.iter().copied().collect();
    s.into_iter().collect()
}

impl FatPadMap {
    /// Validate `file` against `mesh` and bind handle rest positions.
    pub fn from_file(file: MapFile, mesh: &TriMesh) -> Result<Self, MapError> {
        let found = MapFingerprint::of(mesh);
        if file.fingerprint != found {
            return Err(MapError::TopologyMismatch {
                expected: file.fingerprint.topology,
                found: found.topology,
            });
        }
        let n = mesh.vertex_count();
        let mut pads = Vec::with_capacity(file.pads.len());
        let mut handles = Vec::new();
        let mut pad_index = HashMap::new();
        let mut handle_index = HashMap::new();
        for spec in file.pads {
            if pad_index.contains_key(&spec.id) {
                return Err(MapError::DuplicatePad(spec.id));
            }
            if spec.vertices.is_empty() {
                return Err(MapError::EmptyPad(spec.id));
            }
            if spec.handles.is_empty() {
                return Err(MapError::NoHandles(spec.id));
            }
            for &v in spec.vertices.iter().chain(&spec.movable_border) {
                if v >= n {
                    return Err(MapError::VertexOutOfRange {
                        pad: spec.id,
                        vertex: v,
                        count: n,
                    });
                }
            }
            let vertices = sorted_unique(&spec.vertices);
            let border = compute_border(mesh, &vertices);
            let movable_border = sorted_unique(&spec.movable_border);
            if let Some(&v) = movable_border.iter().find(|v| border.binary_search(v).is_err()) {
                return Err(MapError::MovableNotOnBorder { pad: spec.id, vertex: v });
            }
            let mut ids = Vec::new();
            for h in &spec.handles {
                if handle_index.contains_key(&h.id) {
                    return Err(MapError::DuplicateHandle(h.id.clone()));
                }
                if h.anchor >= n || vertices.binary_search(&h.anchor).is_err() {
                    return Err(MapError::AnchorNotInPad {
                        pad: spec.id.clone(),
                        handle: h.id.clone(),
                        anchor: h.anchor,
                    });
                }
                if border.binary_search(&h.anchor).is_ok() {
                    return Err(MapError::AnchorOnBorder {
                        pad: spec.id.clone(),
                        handle: h.id.clone(),
                        anchor: h.anchor,
                    });
                }
                if let Some(m) = h.axis_mask {
                    if m.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) || m.iter().all(|&x| x == 0.0) {
                        return Err(MapError::BadAxisMask(h.id.clone()));
                    }
                }
                handle_index.insert(h.id.clone(), handles.len());
                handles.push(Handle {
                    id: h.id.clone(),
                    pad_id: spec.id.clone(),
                    anchor: h.anchor,
                    rest_position: mesh.position(h.anchor),
                    axis_mask: h.axis_mask,
                });
                ids.push(h.id.clone());
            }
            pad_index.insert(spec.id.clone(), pads.len());
            pads.push(FatPad {
                id: spec.id,
                region: spec.region,
                vertices,
                handles: ids,
                movable_border,
                border,
            });
        }
        Ok(FatPadMap {
            fingerprint: found,
            pads,
            handles,
            pad_index,
            handle_index,
        })
    }

    pub fn to_file(&self) -> MapFile {
        MapFile {
            fingerprint: self.fingerprint.clone(),
            pads: self
                .pads
                .iter()
                .map(|p| PadSpec {
                    id: p.id.clone(),
                    region: p.region,
                    vertices: p.vertices.clone(),
                    movable_border: p.movable_border.clone(),
                    handles: p
                        .handles
                        .iter()
                        .map(|h| {
                            let h = self.handle(h).expect("indexed");
                            HandleSpec {
                                id: h.id.clone(),
                                anchor: h.anchor,
                                axis_mask: h.axis_mask,
                            }
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(&self.to_file()).expect("map serializes")
    }

    /// SHA-256 over the canonical JSON (positions excluded).
    pub fn map_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_file()).expect("map serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn pad(&self, id: &str) -> Result<&FatPad, MapError> {
        self.pad_index
            .get(id)
            .map(|&i| &self.pads[i])
            .ok_or_else(|| MapError::UnknownPad(id.to_string()))
    }

    pub fn handle(&self, id: &str) -> Result<&Handle, MapError> {
        self.handle_index
            .get(id)
            .map(|&i| &self.handles[i])
            .ok_or_else(|| MapError::UnknownHandle(id.to_string()))
    }

    pub fn handle_index(&self, id: &str) -> Option<usize> {
        self.handle_index.get(id).copied()
    }

    pub fn pad_of(&self, handle: &Handle) -> &FatPad {
        &self.pads[self.pad_index[&handle.pad_id]]
    }

    pub fn handles_in(&self, region: Region) -> impl Iterator<Item = &Handle> {
        self.handles.iter().filter(move |h| self.pad_of(h).region == region)
    }

    pub fn pads_in(&self, region: Region) -> impl Iterator<Item = &FatPad> {
        self.pads.iter().filter(move |p| p.region == region)
    }

    /// Sorted union of the vertices of every pad tagged `region`.
    pub fn region_vertices(&self, region: Region) -> Vec<VertexId> {
        let s: BTreeSet<VertexId> = self.pads_in(region).flat_map(|p| p.vertices.iter().copied()).collect();
        s.into_iter().collect()
    }

    /// Pads containing `v`, by id.
    pub fn pads_containing(&self, v: VertexId) -> Vec<&str> {
        self.pads.iter().filter(|p| p.contains(v)).map(|p| p.id.as_str()).collect()
    }
}

pub fn load_map(bytes: &[u8], mesh: &TriMesh) -> Result<FatPadMap, MapError> {
    let file: MapFile = serde_json::from_slice(bytes).map_err(|e| MapError::Json(e.to_string()))?;
    FatPadMap::from_file(file, mesh)
}

/// Rebind a map to another mesh with the same triangle list.
pub fn transfer_map(map: &FatPadMap, target: &TriMesh) -> Result<FatPadMap, MapError> {
    let found = MapFingerprint::of(target);
    if found != map.fingerprint {
        return Err(MapError::TopologyMismatch {
            expected: map.fingerprint.topology.clone(),
            found: found.topology,
        });
    }
    let mut out = map.clone();
    for h in &mut out.handles {
        h.rest_position = target.position(h.anchor);
    }
    Ok(out)
}

/// Closed, adjacency-ordered loops of a pad's border. Loops follow the
/// orientation of the pad's triangles and start at their smallest vertex.
pub fn pad_border(map: &FatPadMap, pad_id: &str, mesh: &TriMesh) -> Result<Vec<Vec<VertexId>>, MapError> {
    let pad = map.pad(pad_id)?;
    border_loops(mesh, pad).map_err(|vertices| MapError::NonManifoldBorder {
        pad: pad.id.clone(),
        vertices,
    })
}

fn border_loops(mesh: &TriMesh, pad: &FatPad) -> Result<Vec<Vec<VertexId>>, Vec<VertexId>> {
    // directed edges of triangles fully inside the pad
    let mut directed: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
    for t in mesh.triangles() {
        if t.iter().all(|&v| pad.contains(v)) {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *directed.entry((a, b)).or_default() += 1;
            }
        }
    }
    let mut next: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) {
            next.entry(a).or_default().push(b);
        }
    }
    let on_loops: BTreeSet<VertexId> = next.keys().copied().collect();
    let mut bad: BTreeSet<VertexId> = next.iter().filter(|(_, s)| s.len() > 1).map(|(&v, _)| v).collect();
    for &v in &pad.border {
        if !on_loops.contains(&v) {
            bad.insert(v);
        }
    }
    if !bad.is_empty() {
        return Err(bad.into_iter().collect());
    }
    let mut visited: HashSet<VertexId> = HashSet::new();
    let mut loops = Vec::new();
    for &start in next.keys() {
        if visited.contains(&start) {
            continue;
        }
        let mut lp = vec![start];
        visited.insert(start);
        let mut cur = next[&start][0];
        while cur != start {
            if !visited.insert(cur) {
                return Err(vec![cur]);
            }
            lp.push(cur);
            match next.get(&cur) {
                Some(s) => cur = s[0],
                None => return Err(vec![cur]),
            }
        }
        loops.push(lp);
    }
    Ok(loops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{grid, icosphere, spiral_disc};

    fn disc() -> (TriMesh, usize) {
        spiral_disc(120, 40, 1.0, 1.4)
    }

    fn single_pad(mesh: &TriMesh, vertices: Vec<VertexId>, movable: Vec<VertexId>, anchor: VertexId) -> MapFile {
        MapFile {
            fingerprint: MapFingerprint::of(mesh),
            pads: vec![PadSpec {
                id: "p".into(),
                region: Region::Upper,
                vertices,
                movable_border: movable,
                handles: vec![HandleSpec {
                    id: "h".into(),
                    anchor,
                    axis_mask: None,
                }],
            }],
        }
    }

    #[test]
    fn disc_pad_border_is_rim() {
        let (m, inside) = disc();
        let map = FatPadMap::from_file(single_pad(&m, (0..inside).collect(), vec![], 0), &m).unwrap();
        let pad = map.pad("p").unwrap();
        let rim: Vec<usize> = (inside - 40..inside).collect();
        assert_eq!(pad.border, rim);
        let loops = pad_border(&map, "p", &m).unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 40);
        // consecutive loop vertices are mesh neighbours
        for k in 0..40 {
            let (a, b) = (loops[0][k], loops[0][(k + 1) % 40]);
            assert!(m.topology().neighbors(a).contains(&b));
        }
        assert_eq!(map.handle("h").unwrap().rest_position, m.position(0));
    }

    #[test]
    fn movable_interior_vertex_is_rejected() {
        let (m, inside) = disc();
        let err = FatPadMap::from_file(single_pad(&m, (0..inside).collect(), vec![5], 0), &m).unwrap_err();
        assert_eq!(err, MapError::MovableNotOnBorder { pad: "p".into(), vertex: 5 });
        assert!(err.to_string().contains("pad p") && err.to_string().contains('5'));
    }

    #[test]
    fn overlapping_pads_are_legal() {
        let m = grid(10, 10, 1.0);
        let left: Vec<usize> = (0..m.vertex_count()).filter(|&v| v % 11 <= 6).collect();
        let right: Vec<usize> = (0..m.vertex_count()).filter(|&v| v % 11 >= 4).collect();
        let mut file = single_pad(&m, left.clone(), vec![], 5 * 11 + 2);
        file.pads.push(PadSpec {
            id: "q".into(),
            region: Region::Lower,
            vertices: right.clone(),
            movable_border: vec![],
            handles: vec![HandleSpec {
                id: "k".into(),
                anchor: 5 * 11 + 8,
                axis_mask: None,
            }],
        });
        let map = FatPadMap::from_file(file, &m).unwrap();
        let shared = left.iter().filter(|v| right.contains(v)).count();
        assert!(shared as f64 / left.len() as f64 >= 0.3);
        assert_eq!(map.pads_containing(5 * 11 + 5), vec!["p", "q"]);
        assert_eq!(map.region_vertices(Region::Lower), right);
    }

    #[test]
    fn validation_errors() {
        let (m, inside) = disc();
        let base = single_pad(&m, (0..inside).collect(), vec![], 0);

        let mut f = base.clone();
        f.pads[0].vertices.push(99999);
        assert!(matches!(FatPadMap::from_file(f, &m), Err(MapError::VertexOutOfRange { vertex: 99999, .. })));

        let mut f = base.clone();
        f.pads.push(f.pads[0].clone());
        assert_eq!(FatPadMap::from_file(f, &m), Err(MapError::DuplicatePad("p".into())));

        let mut f = base.clone();
        let mut other = f.pads[0].clone();
        other.id = "p2".into();
        f.pads.push(other);
        assert_eq!(FatPadMap::from_file(f, &m), Err(MapError::DuplicateHandle("h".into())));

        let mut f = base.clone();
        f.pads[0].handles[0].anchor = inside - 1;
        assert!(matches!(FatPadMap::from_file(f, &m), Err(MapError::AnchorOnBorder { .. })));

        let mut f = base.clone();
        f.pads[0].handles[0].anchor = inside + 3;
        assert!(matches!(FatPadMap::from_file(f, &m), Err(MapError::AnchorNotInPad { .. })));

        let mut f = base.clone();
        f.pads[0].handles.clear();
        assert_eq!(FatPadMap::from_file(f, &m), Err(MapError::NoHandles("p".into())));

        let mut f = base;
        f.fingerprint.topology = "0".repeat(64);
        assert!(matches!(FatPadMap::from_file(f, &m), Err(MapError::TopologyMismatch { .. })));

        assert!(matches!(load_map(b"{\"pads\": 3}", &m), Err(MapError::Json(_))));
    }

    #[test]
    fn json_round_trip_and_hash() {
        let (m, inside) = disc();
        let map = FatPadMap::from_file(single_pad(&m, (0..inside).collect(), vec![inside - 1], 0), &m).unwrap();
        let again = load_map(&map.to_json(), &m).unwrap();
        assert_eq!(map, again);
        assert_eq!(map.map_hash(), again.map_hash());
        let text = String::from_utf8(map.to_json()).unwrap();
        for key in ["\"fingerprint\"", "\"pads\"", "\"id\"", "\"region\"", "\"vertices\"", "\"movable_border\"", "\"handles\"", "\"anchor\""] {
            assert!(text.contains(key), "{key}");
        }
    }

    #[test]
    fn transfer_rebinds_positions() {
        let (m, inside) = disc();
        let map = FatPadMap::from_file(single_pad(&m, (0..inside).collect(), vec![], 0), &m).unwrap();
        let same = transfer_map(&map, &m).unwrap();
        assert_eq!(same, map);
        let moved = m
            .with_positions(m.positions().iter().map(|p| p + Vec3::new(0.0, 0.0, 2.0)).collect())
            .unwrap();
        let t = transfer_map(&map, &moved).unwrap();
        assert_eq!(t.pads, map.pads);
        assert_eq!(t.handles[0].rest_position, moved.position(0));
        assert_eq!(transfer_map(&t, &moved).unwrap(), t);

        let mut pos = m.positions().to_vec();
        pos.push(Vec3::zeros());
        let bigger = TriMesh::new(pos, m.triangles().to_vec()).unwrap();
        assert!(matches!(transfer_map(&map, &bigger), Err(MapError::TopologyMismatch { .. })));
    }

    #[test]
    fn annulus_has_two_loops_and_sphere_none() {
        let (m, _) = disc();
        let ring: Vec<usize> = (0..m.vertex_count())
            .filter(|&v| {
                let r = m.position(v).norm();
                (0.45..=1.0 + 1e-9).contains(&r)
            })
            .collect();
        let anchor = *ring.iter().find(|&&v| (m.position(v).norm() - 0.75).abs() < 0.1).unwrap();
        let map = FatPadMap::from_file(single_pad(&m, ring.clone(), vec![], anchor), &m);
        let map = match map {
            Ok(map) => map,
            Err(MapError::AnchorOnBorder { .. }) => panic!("anchor choice"),
            Err(e) => panic!("{e}"),
        };
        let loops = pad_border(&map, "p", &m).unwrap();
        assert_eq!(loops.len(), 2);
        let total: usize = loops.iter().map(Vec::len).sum();
        assert_eq!(total, map.pad("p").unwrap().border.len());

        let s = icosphere(2, 1.0);
        let all: Vec<usize> = (0..s.vertex_count()).collect();
        let map = FatPadMap::from_file(single_pad(&s, all, vec![], 0), &s).unwrap();
        assert!(pad_border(&map, "p", &s).unwrap().is_empty());
        assert!(map.pad("p").unwrap().border.is_empty());
    }

    #[test]
    fn bowtie_border_is_non_manifold() {
        // two grid cells touching only at (1, 1)
        let m = grid(4, 4, 1.0);
        let idx = |i: usize, j: usize| j * 5 + i;
        let pad = FatPad {
            id: "b".into(),
            region: Region::Upper,
            vertices: sorted_unique(&[idx(0, 1), idx(1, 1), idx(1, 2), idx(0, 2), idx(1, 0), idx(2, 0), idx(2, 1)]),
            handles: vec![],
            movable_border: vec![],
            border: vec![],
        };
        let err = border_loops(&m, &pad).unwrap_err();
        assert_eq!(err, vec![idx(1, 1)]);
    }
}
