//! Per-handle weight matrices.
//!
//! For a pad vertex `v` and handle `h` the weight is
//! `((d(v,h) - d(i,h)) / d(i,h))^2`, clamped to `[0, 1]`, where `i` is the
//! point where the pad border meets the plane through `h` and `v` spanned
//! with the handle normal. Among several such points only those on `v`'s side
//! of `h` and not closer to `h` than `v` qualify, and the one nearest to `v`
//! wins. Anchors and movable border vertices get 1, other border vertices 0.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fatpad::{pad_border, FatPad, FatPadMap, Handle, MapError};
use crate::geodesic::{
    propagate, refined_graph_field, DistanceField, GeodesicCache, GeodesicError, GeodesicMethod, SurfacePoint,
    DEFAULT_FALLBACK_REFINEMENT,
};
use crate::geometry::Vec3;
use crate::mesh::{TriMesh, VertexId};

#[derive(Debug, Error, PartialEq)]
pub enum AttenuationError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error("pad {0} has no border; weights are undefined")]
    NoBorder(String),
    #[error("vertex {vertex} is not in the pad of handle {handle}")]
    NotInPad { handle: String, vertex: VertexId },
    #[error("handle {handle}: no border intersection for vertex {vertex}")]
    NoIntersection { handle: String, vertex: VertexId },
    #[error("handle {0} sits on its pad border (zero distance to the border)")]
    InvalidHandlePlacement(String),
    #[error("handle {handle}: pad vertex {vertex} is unreachable over the surface")]
    Unreachable { handle: String, vertex: VertexId },
    #[error("handle {handle}: {unresolved} of {total} pad vertices have no border intersection")]
    TooManyUnresolved { handle: String, unresolved: usize, total: usize },
    #[error("weights were computed for another mesh or map ({0})")]
    StaleWeights(String),
    #[error("corrupt weights file: {0}")]
    Corrupt(String),
}

/// Distance used by the "v lies between h and i" test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetweenMetric {
    Geodesic,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationParams {
    /// Direction test accepts `cos(angle) > 1 - direction_epsilon`.
    pub direction_epsilon: f64,
    pub between: BetweenMetric,
    pub geodesic: GeodesicMethod,
    /// Fraction of pad vertices allowed to end without an intersection.
    pub max_unresolved_fraction: f64,
}

impl Default for AttenuationParams {
    fn default() -> Self {
        AttenuationParams {
            direction_epsilon: 1e-4,
            between: BetweenMetric::Geodesic,
            geodesic: GeodesicMethod::Exact,
            max_unresolved_fraction: 0.01,
        }
    }
}

/// Plane/border crossing: `a + t (b - a)` on border edge `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BorderCandidate {
    pub edge: (VertexId, VertexId),
    pub t: f64,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionResult {
    pub point: SurfacePoint,
    pub edge: (VertexId, VertexId),
    pub t: f64,
    pub position: Vec3,
    /// Geodesic distance handle -> point.
    pub d_ih: f64,
    /// Plane/border crossings found before filtering.
    pub candidates_considered: usize,
    /// The plane had to be re-spanned with the pad's mean normal.
    pub used_average_normal: bool,
}

/// The attenuation formula on raw distances, clamped to `[0, 1]`.
pub fn attenuation_weight(d_vh: f64, d_ih: f64) -> Option<f64> {
    if !(d_ih > 0.0) {
        return None;
    }
    let r = (d_vh - d_ih) / d_ih;
    Some((r * r).clamp(0.0, 1.0))
}

/// Sparse weights of one handle; vertices not listed weigh 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub handle: String,
    /// Sorted by vertex.
    pub entries: Vec<(VertexId, f64)>,
}

impl WeightMatrix {
    pub fn get(&self, v: VertexId) -> f64 {
        match self.entries.binary_search_by_key(&v, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightReport {
    pub handle: String,
    /// Pad vertices left at weight 0 for lack of an intersection.
    pub unresolved: Vec<VertexId>,
    /// Vertices that needed the mean-normal retry.
    pub retried: usize,
}

/// Everything needed to evaluate weights of one handle.
pub struct HandleAttenuation<'a> {
    mesh: &'a TriMesh,
    handle: &'a Handle,
    pad: &'a FatPad,
    segments: Vec<(VertexId, VertexId)>,
    h_field: Arc<dyn DistanceField>,
    h_pos: Vec3,
    normal: Vec3,
    average_normal: Vec3,
    params: AttenuationParams,
    tol: f64,
}

fn project(x: Vec3, n: &Vec3) -> Vec3 {
    x - n * x.dot(n)
}

impl<'a> HandleAttenuation<'a> {
    pub fn new(
        mesh: &'a TriMesh,
        map: &'a FatPadMap,
        handle_id: &str,
        params: AttenuationParams,
        cache: &GeodesicCache,
    ) -> Result<Self, AttenuationError> {
        let handle = map.handle(handle_id)?;
        let pad = map.pad_of(handle);
        let loops = pad_border(map, &pad.id, mesh)?;
        if loops.is_empty() {
            return Err(AttenuationError::NoBorder(pad.id.clone()));
        }
        let segments: Vec<(VertexId, VertexId)> = loops
            .iter()
            .flat_map(|lp| (0..lp.len()).map(move |k| (lp[k], lp[(k + 1) % lp.len()])))
            .collect();
        let h_pos = mesh.position(handle.anchor);
        let max_seg = segments
            .iter()
            .map(|&(a, b)| (mesh.position(a) - mesh.position(b)).norm())
            .fold(0.0, f64::max);
        let h_field: Arc<dyn DistanceField> = match params.geodesic {
            GeodesicMethod::Exact => {
                let mut radius = 2.0 * pad.vertices.iter().map(|&v| (mesh.position(v) - h_pos).norm()).fold(0.0, f64::max)
                    + max_seg;
                loop {
                    let f = cache.get_or_solve_within(mesh, handle.anchor, radius)?;
                    let need = pad.vertices.iter().map(|&v| f.vertex(v)).fold(0.0, f64::max) + max_seg;
                    if need <= f.horizon() {
                        break f;
                    }
                    if f.horizon().is_infinite() {
                        let v = *pad.vertices.iter().find(|&&v| f.vertex(v).is_infinite()).expect("unreachable vertex");
                        return Err(AttenuationError::Unreachable {
                            handle: handle.id.clone(),
                            vertex: v,
                        });
                    }
                    radius = if need.is_finite() { (2.0 * radius).max(1.1 * need) } else { 2.0 * radius };
                }
            }
            GeodesicMethod::RefinedDijkstra => Arc::new(refined_graph_field(mesh, handle.anchor, DEFAULT_FALLBACK_REFINEMENT)),
        };
        let normal = mesh.normal(handle.anchor);
        let sum: Vec3 = pad.vertices.iter().map(|&v| mesh.normal(v)).sum();
        let average_normal = if sum.norm() > 0.0 { sum.normalize() } else { normal };
        Ok(HandleAttenuation {
            mesh,
            handle,
            pad,
            segments,
            h_field,
            h_pos,
            normal,
            average_normal,
            params,
            tol: 1e-9 * mesh.bbox_diagonal(),
        })
    }

    pub fn handle(&self) -> &Handle {
        self.handle
    }

    pub fn pad(&self) -> &FatPad {
        self.pad
    }

    pub fn handle_field(&self) -> &dyn DistanceField {
        self.h_field.as_ref()
    }

    /// Crossings of the plane through `h` and `v` spanned with `normal` and
    /// the pad border, one per distinct point.
    pub fn plane_candidates(&self, v: VertexId, normal: &Vec3) -> Vec<BorderCandidate> {
        let p = self.mesh.positions();
        let dv = p[v] - self.h_pos;
        let np = dv.cross(normal);
        if np.norm() <= 1e-12 * dv.norm() || dv.norm() == 0.0 {
            return Vec::new();
        }
        let np = np.normalize();
        let mut out: Vec<BorderCandidate> = Vec::new();
        let mut at_vertex: Vec<VertexId> = Vec::new();
        let mut push_vertex = |x: VertexId, y: VertexId, out: &mut Vec<BorderCandidate>| {
            if !at_vertex.contains(&x) {
                at_vertex.push(x);
                out.push(BorderCandidate {
                    edge: (x, y),
                    t: 0.0,
                    position: p[x],
                });
            }
        };
        for &(a, b) in &self.segments {
            let sa = np.dot(&(p[a] - self.h_pos));
            let sb = np.dot(&(p[b] - self.h_pos));
            if sa == 0.0 {
                push_vertex(a, b, &mut out);
            }
            if sb == 0.0 {
                push_vertex(b, a, &mut out);
            }
            if sa != 0.0 && sb != 0.0 && (sa < 0.0) != (sb < 0.0) {
                let t = sa / (sa - sb);
                out.push(BorderCandidate {
                    edge: (a, b),
                    t,
                    position: p[a] + (p[b] - p[a]) * t,
                });
            }
        }
        out
    }

    fn same_direction(&self, v: VertexId, c: &BorderCandidate, normal: &Vec3) -> bool {
        let dv = project(self.mesh.position(v) - self.h_pos, normal);
        let di = project(c.position - self.h_pos, normal);
        if dv.norm() == 0.0 || di.norm() == 0.0 {
            return false;
        }
        dv.normalize().dot(&di.normalize()) > 1.0 - self.params.direction_epsilon
    }

    fn d_ih(&self, c: &BorderCandidate) -> f64 {
        self.h_field.edge_point(c.edge.0, c.edge.1, c.t)
    }

    fn between(&self, v: VertexId, c: &BorderCandidate) -> bool {
        match self.params.between {
            BetweenMetric::Geodesic => self.h_field.vertex(v) <= self.d_ih(c) + self.tol,
            BetweenMetric::Euclidean => {
                (self.mesh.position(v) - self.h_pos).norm() <= (c.position - self.h_pos).norm() + self.tol
            }
        }
    }

    /// Index of the candidate geodesically nearest to `v`.
    fn nearest(&self, v: VertexId, cands: &[BorderCandidate]) -> usize {
        let pv = self.mesh.position(v);
        let dist_all = |f: &dyn DistanceField| -> Vec<f64> { cands.iter().map(|c| f.edge_point(c.edge.0, c.edge.1, c.t)).collect() };
        let d = match self.params.geodesic {
            GeodesicMethod::Exact => {
                let mut radius = 1.5 * cands.iter().map(|c| (c.position - pv).norm()).fold(f64::INFINITY, f64::min) + self.tol;
                loop {
                    let f = propagate(self.mesh, v, radius);
                    let d = dist_all(&f);
                    let best = d.iter().copied().fold(f64::INFINITY, f64::min);
                    if best <= f.horizon() {
                        break d;
                    }
                    radius *= 2.0;
                }
            }
            GeodesicMethod::RefinedDijkstra => dist_all(&refined_graph_field(self.mesh, v, DEFAULT_FALLBACK_REFINEMENT)),
        };
        (0..cands.len()).min_by(|&x, &y| d[x].total_cmp(&d[y]).then(x.cmp(&y))).expect("non-empty")
    }

    fn filtered(&self, v: VertexId, normal: &Vec3) -> (usize, Vec<BorderCandidate>) {
        let all = self.plane_candidates(v, normal);
        let n = all.len();
        let kept = all
            .into_iter()
            .filter(|c| self.same_direction(v, c, normal) && self.between(v, c))
            .collect();
        (n, kept)
    }

    pub fn border_intersection(&self, v: VertexId) -> Result<IntersectionResult, AttenuationError> {
        if !self.pad.contains(v) {
            return Err(AttenuationError::NotInPad {
                handle: self.handle.id.clone(),
                vertex: v,
            });
        }
        let (mut considered, mut kept) = self.filtered(v, &self.normal);
        let mut used_average = false;
        if kept.is_empty() {
            let (n2, k2) = self.filtered(v, &self.average_normal);
            considered += n2;
            kept = k2;
            used_average = true;
        }
        if kept.is_empty() {
            return Err(AttenuationError::NoIntersection {
                handle: self.handle.id.clone(),
                vertex: v,
            });
        }
        let pick = if kept.len() == 1 { 0 } else { self.nearest(v, &kept) };
        let c = kept[pick];
        Ok(IntersectionResult {
            point: self.surface_point(&c),
            edge: c.edge,
            t: c.t,
            position: c.position,
            d_ih: self.d_ih(&c),
            candidates_considered: considered,
            used_average_normal: used_average,
        })
    }

    fn surface_point(&self, c: &BorderCandidate) -> SurfacePoint {
        let topo = self.mesh.topology();
        let (a, b) = c.edge;
        let e = topo.find_edge(a, b).expect("border segment is a mesh edge");
        let faces = topo.edge_faces(e);
        let f = faces
            .iter()
            .copied()
            .find(|&f| self.mesh.triangles()[f].iter().all(|&x| self.pad.contains(x)))
            .unwrap_or(faces[0]);
        let tri = self.mesh.triangles()[f];
        let mut bary = [0.0; 3];
        for k in 0..3 {
            if tri[k] == a {
                bary[k] = 1.0 - c.t;
            } else if tri[k] == b {
                bary[k] = c.t;
            }
        }
        SurfacePoint {
            triangle: f,
            barycentric: bary,
        }
    }

    /// Weight of pad vertex `v`, with overrides applied.
    pub fn weight(&self, v: VertexId) -> Result<f64, AttenuationError> {
        self.weight_detail(v).map(|(w, _)| w)
    }

    /// Weight plus whether the mean-normal retry was needed.
    fn weight_detail(&self, v: VertexId) -> Result<(f64, bool), AttenuationError> {
        if !self.pad.contains(v) {
            return Err(AttenuationError::NotInPad {
                handle: self.handle.id.clone(),
                vertex: v,
            });
        }
        if v == self.handle.anchor || self.pad.is_movable_border(v) {
            return Ok((1.0, false));
        }
        if self.pad.is_border(v) {
            return Ok((0.0, false));
        }
        let hit = self.border_intersection(v)?;
        let w = attenuation_weight(self.h_field.vertex(v), hit.d_ih)
            .ok_or_else(|| AttenuationError::InvalidHandlePlacement(self.handle.id.clone()))?;
        Ok((w, hit.used_average_normal))
    }

    pub fn weight_matrix(&self) -> Result<(WeightMatrix, WeightReport), AttenuationError> {
        let results: Vec<(VertexId, Result<(f64, bool), AttenuationError>)> =
            self.pad.vertices.par_iter().map(|&v| (v, self.weight_detail(v))).collect();
        let mut entries = Vec::with_capacity(results.len());
        let mut report = WeightReport {
            handle: self.handle.id.clone(),
            ..Default::default()
        };
        for (v, w) in results {
            match w {
                Ok((w, retried)) => {
                    entries.push((v, w));
                    report.retried += usize::from(retried);
                }
                Err(AttenuationError::NoIntersection { .. }) => {
                    log::warn!("handle {}: vertex {v} has no border intersection, weight 0", self.handle.id);
                    report.unresolved.push(v);
                    entries.push((v, 0.0));
                }
                Err(e) => return Err(e),
            }
        }
        let total = self.pad.vertices.len();
        if report.unresolved.len() as f64 > self.params.max_unresolved_fraction * total as f64 {
            return Err(AttenuationError::TooManyUnresolved {
                handle: self.handle.id.clone(),
                unresolved: report.unresolved.len(),
                total,
            });
        }
        Ok((
            WeightMatrix {
                handle: self.handle.id.clone(),
                entries,
            },
            report,
        ))
    }
}

pub fn border_intersection(
    mesh: &TriMesh,
    map: &FatPadMap,
    handle_id: &str,
    v: VertexId,
    params: AttenuationParams,
) -> Result<IntersectionResult, AttenuationError> {
    HandleAttenuation::new(mesh, map, handle_id, params, &GeodesicCache::in_memory())?.border_intersection(v)
}

pub fn compute_weight(
    mesh: &TriMesh,
    map: &FatPadMap,
    handle_id: &str,
    v: VertexId,
    params: AttenuationParams,
) -> Result<f64, AttenuationError> {
    HandleAttenuation::new(mesh, map, handle_id, params, &GeodesicCache::in_memory())?.weight(v)
}

pub fn build_weight_matrix(
    mesh: &TriMesh,
    map: &FatPadMap,
    handle_id: &str,
    params: AttenuationParams,
    cache: &GeodesicCache,
) -> Result<(WeightMatrix, WeightReport), AttenuationError> {
    HandleAttenuation::new(mesh, map, handle_id, params, cache)?.weight_matrix()
}

/// Matrices of every handle, computed in parallel and ordered by handle id.
pub fn build_all_weights(
    mesh: &TriMesh,
    map: &FatPadMap,
    params: AttenuationParams,
    cache: &GeodesicCache,
) -> Result<(WeightSet, Vec<WeightReport>), AttenuationError> {
    let mut ids: Vec<&str> = map.handles.iter().map(|h| h.id.as_str()).collect();
    ids.sort_unstable();
    let results: Vec<_> = ids
        .par_iter()
        .map(|id| build_weight_matrix(mesh, map, id, params, cache))
        .collect();
    let mut matrices = Vec::with_capacity(results.len());
    let mut reports = Vec::with_capacity(results.len());
    for r in results {
        let (m, rep) = r?;
        matrices.push(m);
        reports.push(rep);
    }
    Ok((WeightSet::new(mesh, map, matrices), reports))
}

/// All weight matrices of a map, tied to the mesh and map they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    /// Content hash of the mesh (positions and triangles).
    pub mesh_fingerprint: String,
    pub map_hash: String,
    pub matrices: Vec<WeightMatrix>,
}

impl WeightSet {
    pub fn new(mesh: &TriMesh, map: &FatPadMap, matrices: Vec<WeightMatrix>) -> Self {
        WeightSet {
            mesh_fingerprint: mesh.content_hash(),
            map_hash: map.map_hash(),
            matrices,
        }
    }

    pub fn matrix(&self, handle: &str) -> Option<&WeightMatrix> {
        self.matrices.iter().find(|m| m.handle == handle)
    }
}

pub fn save_weights(set: &WeightSet) -> Vec<u8> {
    serde_json::to_vec(set).expect("weights serialize")
}

/// Parse and check that `bytes` belong to `mesh` and `map`.
pub fn load_weights(bytes: &[u8], mesh: &TriMesh, map: &FatPadMap) -> Result<WeightSet, AttenuationError> {
    let set: WeightSet = serde_json::from_slice(bytes).map_err(|e| AttenuationError::Corrupt(e.to_string()))?;
    if set.mesh_fingerprint != mesh.content_hash() {
        return Err(AttenuationError::StaleWeights("mesh changed".into()));
    }
    if set.map_hash != map.map_hash() {
        return Err(AttenuationError::StaleWeights("map changed".into()));
    }
    for m in &set.matrices {
        if map.handle(&m.handle).is_err() {
            return Err(AttenuationError::Corrupt(format!("unknown handle {}", m.handle)));
        }
        for pair in m.entries.windows(2) {
            if pair[0].0 >= pair[1].0 {
                return Err(AttenuationError::Corrupt(format!("entries of {} not sorted", m.handle)));
            }
        }
        if let Some(&(v, w)) = m
            .entries
            .iter()
            .find(|&&(v, w)| v >= mesh.vertex_count() || !(0.0..=1.0).contains(&w))
        {
            return Err(AttenuationError::Corrupt(format!("entry ({v}, {w}) of {}", m.handle)));
        }
    }
    Ok(set)
}
