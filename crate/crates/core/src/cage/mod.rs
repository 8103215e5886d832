//! Closed cages around the upper and lower face regions.
//!
//! Construction runs in four steps:
//! 1. convex hull of the region's handle anchors, keeping the faces that
//!    look towards the viewer (+z), with hidden anchors inserted so every
//!    handle owns a cage vertex;
//! 2. offset of every bound vertex along its anchor normal (`scale_cage`);
//! 3. duplication of the rim into a fixed outer ring joined by a strip
//!    (`duplicate_and_fix_borders`);
//! 4. closure with two fixed vertices behind the head (`close_cage`).
//!
//! The offset grows by `escalation` until the cage neither crosses a region
//! triangle nor leaves a region vertex outside.

pub mod hull;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fatpad::{FatPadMap, Region};
use crate::geometry::{from_array, to_array, triangles_intersect, vec3, Aabb, Vec3};
use crate::green::winding_number;
use crate::mesh::{TriMesh, TriangleBvh, VertexId};

pub use hull::{convex_hull, Hull, HullError};

#[derive(Debug, Error, PartialEq)]
pub enum CageError {
    #[error("{region} region has {count} handles, at least 4 are needed")]
    TooFewHandles { region: &'static str, count: usize },
    #[error("{region} region anchors are coplanar")]
    DegenerateHull { region: &'static str },
    #[error("handles {0} and {1} share an anchor position")]
    DuplicateAnchor(String, String),
    #[error("handle {0} is hidden behind another anchor")]
    HiddenAnchor(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("cage rim is not a simple cycle")]
    RimNotSimple,
    #[error("cage has {0} open boundary loops, expected 1")]
    OpenLoops(usize),
    #[error(
        "cage construction failed for the {region} region after {iterations} offsets (last offset {offset}): \
         {intersections} cage/mesh intersections, {outside} region vertices outside, {self_intersections} self-intersections"
    )]
    ConstructionFailure {
        region: &'static str,
        iterations: usize,
        offset: f64,
        intersections: usize,
        outside: usize,
        self_intersections: usize,
    },
    #[error("cage file: {0}")]
    Format(String),
}

/// How bound cage vertices move away from the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    /// Along the anchor's vertex normal.
    #[default]
    NormalOffset,
    /// Away from the centroid of the region's anchors.
    Centroid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CageParams {
    /// Offset as a fraction of the mesh bbox diagonal; doubled for the lower region.
    pub alpha_base: f64,
    pub escalation: f64,
    pub max_iterations: usize,
    /// Distance of the closing vertices behind the mesh, fraction of the diagonal.
    pub back_margin: f64,
    /// Per-handle axis masks; these win over masks stored in the map.
    pub axis_masks: BTreeMap<String, [f64; 3]>,
    pub scaling: ScalingMode,
}

impl Default for CageParams {
    fn default() -> Self {
        CageParams {
            alpha_base: 0.05,
            escalation: 1.5,
            max_iterations: 10,
            back_margin: 0.1,
            axis_masks: BTreeMap::new(),
            scaling: ScalingMode::NormalOffset,
        }
    }
}

impl CageParams {
    pub fn validate(&self) -> Result<(), CageError> {
        let bad = |m: &str| Err(CageError::InvalidParams(m.to_string()));
        if !(self.alpha_base > 0.0 && self.alpha_base.is_finite()) {
            return bad("alpha_base must be positive: a cage on the surface always intersects it");
        }
        if !(self.escalation > 1.0 && self.escalation.is_finite()) {
            return bad("escalation must be greater than 1");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.back_margin > 0.0 && self.back_margin.is_finite()) {
            return bad("back_margin must be positive");
        }
        for (h, m) in &self.axis_masks {
            if m.iter().any(|x| !x.is_finite() || *x < 0.0) || m.iter().all(|&x| x == 0.0) {
                return Err(CageError::InvalidParams(format!("axis mask of {h} must be non-negative and non-zero")));
            }
        }
        Ok(())
    }

    pub fn alpha(&self, region: Region) -> f64 {
        match region {
            Region::Upper => self.alpha_base,
            Region::Lower => 2.0 * self.alpha_base,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cage {
    pub region: Region,
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub handle_binding: BTreeMap<String, usize>,
    pub fixed: BTreeSet<usize>,
}

/// What the escalation loop ended with.
#[derive(Debug, Clone, PartialEq)]
pub struct CageReport {
    pub region: Region,
    pub iterations: usize,
    pub offset: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CageFile {
    pub region: Region,
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub handle_binding: BTreeMap<String, usize>,
    pub fixed: Vec<usize>,
}

fn directed_edges(triangles: &[[usize; 3]]) -> HashMap<(usize, usize), usize> {
    let mut m = HashMap::with_capacity(triangles.len() * 3);
    for (f, t) in triangles.iter().enumerate() {
        for k in 0..3 {
            m.insert((t[k], t[(k + 1) % 3]), f);
        }
    }
    m
}

impl Cage {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_fixed(&self, v: usize) -> bool {
        self.fixed.contains(&v)
    }

    /// Directed boundary edges, as loops in traversal order.
    pub fn boundary_loops(&self) -> Result<Vec<Vec<usize>>, CageError> {
        let edges = directed_edges(&self.triangles);
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        for &(a, b) in edges.keys() {
            if !edges.contains_key(&(b, a)) && next.insert(a, b).is_some() {
                return Err(CageError::RimNotSimple);
            }
        }
        let mut loops = Vec::new();
        while let Some((&start, _)) = next.iter().next() {
            let mut lp = vec![start];
            let mut cur = next.remove(&start).unwrap();
            while cur != start {
                lp.push(cur);
                cur = next.remove(&cur).ok_or(CageError::RimNotSimple)?;
            }
            loops.push(lp);
        }
        Ok(loops)
    }

    /// Every undirected edge used exactly twice, once in each direction.
    pub fn is_closed_manifold(&self) -> bool {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return false;
            }
            for k in 0..3 {
                *count.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        count.iter().all(|(&(a, b), &c)| c == 1 && count.get(&(b, a)) == Some(&1))
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = BTreeSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let used: BTreeSet<usize> = self.triangles.iter().flatten().copied().collect();
        used.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| self.vertices[t[0]].dot(&self.vertices[t[1]].cross(&self.vertices[t[2]])) / 6.0)
            .sum()
    }

    pub fn triangle_points(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Pairs of cage triangles with no shared vertex that intersect.
    pub fn self_intersections(&self) -> usize {
        let boxes: Vec<Aabb> = (0..self.triangles.len()).map(|t| Aabb::from_points(self.triangle_points(t).iter())).collect();
        let mut n = 0;
        for i in 0..self.triangles.len() {
            for j in i + 1..self.triangles.len() {
                let (a, b) = (self.triangles[i], self.triangles[j]);
                if a.iter().any(|x| b.contains(x)) || !boxes[i].overlaps(&boxes[j], 0.0) {
                    continue;
                }
                let (p, q) = (self.triangle_points(i), self.triangle_points(j));
                if triangles_intersect([&p[0], &p[1], &p[2]], [&q[0], &q[1], &q[2]]) {
                    n += 1;
                }
            }
        }
        n
    }

    /// `(cage triangle, mesh triangle)` pairs that intersect, mesh triangles
    /// restricted to `mesh_triangles`.
    pub fn mesh_intersections(&self, mesh: &TriMesh, mesh_triangles: &[usize]) -> Vec<(usize, usize)> {
        let tris: Vec<[Vec3; 3]> = mesh_triangles.iter().map(|&t| mesh.triangle_points(t)).collect();
        let bvh = TriangleBvh::from_triangles(tris.clone());
        let mut out = Vec::new();
        for c in 0..self.triangles.len() {
            let p = self.triangle_points(c);
            for k in bvh.overlapping(&Aabb::from_points(p.iter()), 0.0) {
                let q = &tris[k];
                if triangles_intersect([&p[0], &p[1], &p[2]], [&q[0], &q[1], &q[2]]) {
                    out.push((c, mesh_triangles[k]));
                }
            }
        }
        out
    }

    /// Closed manifold, outward orientation, fixed vertices unbound.
    pub fn check_invariants(&self) -> Result<(), String> {
        if !self.is_closed_manifold() {
            return Err("not a closed, consistently oriented manifold".into());
        }
        if self.euler_characteristic() != 2 {
            return Err(format!("Euler characteristic {}", self.euler_characteristic()));
        }
        if self.signed_volume() <= 0.0 {
            return Err("orientation is inward".into());
        }
        let bound: BTreeSet<usize> = self.handle_binding.values().copied().collect();
        if let Some(v) = self.fixed.iter().find(|v| bound.contains(v)) {
            return Err(format!("fixed vertex {v} is bound to a handle"));
        }
        Ok(())
    }

    pub fn to_file(&self) -> CageFile {
        CageFile {
            region: self.region,
            vertices: self.vertices.iter().map(to_array).collect(),
            triangles: self.triangles.clone(),
            handle_binding: self.handle_binding.clone(),
            fixed: self.fixed.iter().copied().collect(),
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(&self.to_file()).expect("cage serializes")
    }

    pub fn from_file(f: CageFile) -> Result<Cage, CageError> {
        let n = f.vertices.len();
        let bad = |m: String| Err(CageError::Format(m));
        if let Some(t) = f.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return bad(format!("triangle {t:?} out of range"));
        }
        if let Some((h, v)) = f.handle_binding.iter().find(|(_, &v)| v >= n) {
            return bad(format!("handle {h} bound to missing vertex {v}"));
        }
        if let Some(v) = f.fixed.iter().find(|&&v| v >= n) {
            return bad(format!("fixed vertex {v} out of range"));
        }
        if f.vertices.iter().flatten().any(|x| !x.is_finite()) {
            return bad("non-finite vertex".into());
        }
        Ok(Cage {
            region: f.region,
            vertices: f.vertices.into_iter().map(from_array).collect(),
            triangles: f.triangles,
            handle_binding: f.handle_binding,
            fixed: f.fixed.into_iter().collect(),
        })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Cage, CageError> {
        let f: CageFile = serde_json::from_slice(bytes).map_err(|e| CageError::Format(e.to_string()))?;
        Cage::from_file(f)
    }
}

/// Region handles sorted by id with their anchor positions.
fn region_anchors(mesh: &TriMesh, map: &FatPadMap, region: Region) -> Vec<(String, VertexId, Vec3)> {
    let mut v: Vec<(String, VertexId, Vec3)> = map.handles_in(region).map(|h| (h.id.clone(), h.anchor, mesh.position(h.anchor))).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

/// Convex hull of the region's anchors, indices into the handles sorted by id.
pub fn anchor_hull(mesh: &TriMesh, map: &FatPadMap, region: Region) -> Result<Hull, CageError> {
    let anchors = region_anchors(mesh, map, region);
    let pts: Vec<Vec3> = anchors.iter().map(|a| a.2).collect();
    convex_hull(&pts).map_err(|e| match e {
        HullError::TooFewPoints(count) => CageError::TooFewHandles {
            region: region.as_str(),
            count,
        },
        HullError::Degenerate => CageError::DegenerateHull { region: region.as_str() },
    })
}

fn orient2d(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    )
}

/// Open cage: the front (+z facing) part of the anchor hull, every handle
/// bound to one vertex. Vertices sit on their anchors.
pub fn front_surface(mesh: &TriMesh, map: &FatPadMap, region: Region) -> Result<Cage, CageError> {
    let anchors = region_anchors(mesh, map, region);
    let hull = anchor_hull(mesh, map, region)?;
    for i in 0..anchors.len() {
        for j in i + 1..anchors.len() {
            if anchors[i].2 == anchors[j].2 {
                return Err(CageError::DuplicateAnchor(anchors[i].0.clone(), anchors[j].0.clone()));
            }
        }
    }
    let pts: Vec<Vec3> = anchors.iter().map(|a| a.2).collect();
    let mut tris: Vec<[usize; 3]> = hull
        .triangles
        .iter()
        .copied()
        .filter(|t| {
            // exact sign of the normal's z: orientation of the xy projection
            orient2d(&pts[t[0]], &pts[t[1]], &pts[t[2]]) > 0.0
        })
        .collect();
    let mut on_front: BTreeSet<usize> = tris.iter().flatten().copied().collect();
    for h in 0..anchors.len() {
        if on_front.contains(&h) {
            continue;
        }
        let p = &pts[h];
        let mut placed = false;
        for f in 0..tris.len() {
            let t = tris[f];
            let o = [orient2d(&pts[t[1]], &pts[t[2]], p), orient2d(&pts[t[2]], &pts[t[0]], p), orient2d(&pts[t[0]], &pts[t[1]], p)];
            if o.iter().any(|&x| x < 0.0) {
                continue;
            }
            let zeros: Vec<usize> = (0..3).filter(|&k| o[k] == 0.0).collect();
            match zeros.len() {
                0 => {
                    tris[f] = [t[0], t[1], h];
                    tris.push([t[1], t[2], h]);
                    tris.push([t[2], t[0], h]);
                }
                1 => {
                    // on the edge opposite corner k: split both sides of it
                    let k = zeros[0];
                    let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                    let mut split = |a: usize, b: usize| {
                        if let Some(g) = tris.iter().position(|s| (0..3).any(|i| s[i] == a && s[(i + 1) % 3] == b)) {
                            let s = tris[g];
                            let i = (0..3).find(|&i| s[i] == a).unwrap();
                            let c = s[(i + 2) % 3];
                            tris[g] = [a, h, c];
                            tris.push([h, b, c]);
                        }
                    };
                    split(a, b);
                    split(b, a);
                }
                _ => return Err(CageError::HiddenAnchor(anchors[h].0.clone())),
            }
            placed = true;
            break;
        }
        if !placed {
            return Err(CageError::HiddenAnchor(anchors[h].0.clone()));
        }
        on_front.insert(h);
    }
    // compact indices so the cage only holds used vertices
    let remap: BTreeMap<usize, usize> = on_front.iter().enumerate().map(|(i, &h)| (h, i)).collect();
    Ok(Cage {
        region,
        vertices: on_front.iter().map(|&h| pts[h]).collect(),
        triangles: tris.iter().map(|t| hull::canonical_triangle(t.map(|i| remap[&i]))).collect(),
        handle_binding: anchors.iter().enumerate().map(|(h, a)| (a.0.clone(), remap[&h])).collect(),
        fixed: BTreeSet::new(),
    })
}

fn axis_mask(map: &FatPadMap, params: &CageParams, handle: &str) -> Option<[f64; 3]> {
    params
        .axis_masks
        .get(handle)
        .copied()
        .or_else(|| map.handle(handle).ok().and_then(|h| h.axis_mask))
}

/// Offset direction of a bound vertex: anchor normal (or direction from the
/// anchor centroid), masked, renormalised. A mask that kills the normal
/// falls back to the mask's own direction.
fn offset_direction(mesh: &TriMesh, map: &FatPadMap, params: &CageParams, handle: &str, centroid: &Vec3) -> Vec3 {
    let h = map.handle(handle).expect("bound handle exists");
    let base = match params.scaling {
        ScalingMode::NormalOffset => mesh.normal(h.anchor),
        ScalingMode::Centroid => (h.rest_position - centroid).try_normalize(0.0).unwrap_or_else(|| mesh.normal(h.anchor)),
    };
    match axis_mask(map, params, handle) {
        None => base,
        Some(m) => {
            let masked = vec3(base.x * m[0], base.y * m[1], base.z * m[2]);
            masked.try_normalize(1e-12).unwrap_or_else(|| from_array(m).normalize())
        }
    }
}

/// Move every bound vertex by `offset` along its offset direction. Unbound
/// vertices are left alone.
pub fn scale_cage(cage: &Cage, mesh: &TriMesh, map: &FatPadMap, params: &CageParams, offset: f64) -> Cage {
    let bound: Vec<(&String, usize)> = cage.handle_binding.iter().map(|(h, &v)| (h, v)).collect();
    let centroid = bound.iter().map(|&(h, _)| map.handle(h).map(|x| x.rest_position).unwrap_or_default()).sum::<Vec3>() / bound.len().max(1) as f64;
    let mut out = cage.clone();
    for (h, v) in bound {
        out.vertices[v] = cage.vertices[v] + offset_direction(mesh, map, params, h, &centroid) * offset;
    }
    out
}

/// Duplicate the single rim loop into a fixed outer ring and join the two
/// with a strip. The anchors of the rim project onto a convex polygon in xy;
/// the ring is that polygon scaled about its centre just enough to keep
/// every region vertex and every (offset) rim vertex at least `offset`
/// inside, then dropped to `offset` below the lowest of them.
pub fn duplicate_and_fix_borders(cage: &Cage, mesh: &TriMesh, map: &FatPadMap, offset: f64) -> Result<Cage, CageError> {
    let loops = cage.boundary_loops()?;
    if loops.len() != 1 {
        return Err(CageError::RimNotSimple);
    }
    let rim = &loops[0];
    let m = rim.len();
    let pts: Vec<Vec3> = rim.iter().map(|&v| cage.vertices[v]).collect();
    let by_vertex: HashMap<usize, &String> = cage.handle_binding.iter().map(|(h, &v)| (v, h)).collect();
    // rest anchors where known; an unbound rim vertex stands for itself
    let base: Vec<Vec3> = rim
        .iter()
        .map(|v| match by_vertex.get(v).and_then(|h| map.handle(h).ok()) {
            Some(h) => h.rest_position,
            None => cage.vertices[*v],
        })
        .collect();
    let mut region: Vec<Vec3> = map.region_vertices(cage.region).iter().map(|&v| mesh.position(v)).collect();
    region.extend(&pts);
    let zmin = region.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
    let mut c = base.iter().sum::<Vec3>() / m as f64;
    c.z = 0.0;
    let flat = |p: &Vec3| vec3(p.x - c.x, p.y - c.y, 0.0);
    let mut k: f64 = 1.0;
    for i in 0..m {
        let e = base[(i + 1) % m] - base[i];
        let Some(n) = vec3(e.y, -e.x, 0.0).try_normalize(0.0) else {
            continue;
        };
        let h = flat(&base[i]).dot(&n);
        if h <= 1e-12 * (1.0 + offset) {
            continue;
        }
        let reach = region.iter().map(|q| flat(q).dot(&n)).fold(h, f64::max);
        k = k.max((reach + offset) / h);
    }
    let mut out = cage.clone();
    let mut dup = Vec::with_capacity(m);
    for p in &base {
        let d = c + flat(p) * k;
        dup.push(out.vertices.len());
        out.fixed.insert(out.vertices.len());
        out.vertices.push(vec3(d.x, d.y, zmin - offset));
    }
    for i in 0..m {
        let (a, b) = (rim[i], rim[(i + 1) % m]);
        let (a2, b2) = (dup[i], dup[(i + 1) % m]);
        out.triangles.push([b, a, a2]);
        out.triangles.push([b, a2, b2]);
    }
    Ok(out)
}

/// Distance from `o` along `dir` to the first edge of the closed xy polygon
/// strictly ahead of `o`; 0 when there is none.
fn ray_to_polygon(o: &Vec3, dir: &Vec3, poly: &[Vec3]) -> f64 {
    let scale = poly.iter().map(|p| (p - o).norm()).fold(0.0, f64::max);
    let mut best = f64::INFINITY;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let e = b - a;
        let den = dir.x * e.y - dir.y * e.x;
        if den.abs() < 1e-300 {
            continue;
        }
        let w = a - o;
        let t = (w.x * e.y - w.y * e.x) / den;
        let s = (w.x * dir.y - w.y * dir.x) / den;
        if t > 1e-12 * scale && (0.0..=1.0).contains(&s) {
            best = best.min(t);
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// Close the single open loop with two fixed vertices behind the mesh.
/// The loop is cut at its extreme x vertices; each arc fans to one closing
/// vertex, placed on its side of the cut, and two triangles join the fans.
pub fn close_cage(cage: &Cage, mesh: &TriMesh, params: &CageParams) -> Result<Cage, CageError> {
    let loops = cage.boundary_loops()?;
    if loops.len() != 1 {
        return Err(CageError::OpenLoops(loops.len()));
    }
    let ring = &loops[0];
    let m = ring.len();
    let pts: Vec<Vec3> = ring.iter().map(|&v| cage.vertices[v]).collect();
    let ring_box = Aabb::from_points(pts.iter());
    let back_z = mesh.bounding_box().min.z.min(ring_box.min.z) - params.back_margin * mesh.bbox_diagonal();

    let cmp_x = |a: &usize, b: &usize| pts[*a].x.total_cmp(&pts[*b].x).then(a.cmp(b));
    let lo = (0..m).min_by(cmp_x).unwrap();
    let hi = (0..m).max_by(cmp_x).unwrap();
    // edges i -> i+1 walking from lo reach hi first (arc a), then come back (arc b)
    let arc_a: Vec<usize> = (0..m).map(|k| (lo + k) % m).take_while(|&i| i != hi).collect();
    let arc_b: Vec<usize> = (0..m).map(|k| (hi + k) % m).take_while(|&i| i != lo).collect();
    let mid = (pts[lo] + pts[hi]) / 2.0;
    let chord = pts[hi] - pts[lo];
    // the loop runs counter-clockwise seen from +z, so arc a lies to the right of lo -> hi
    let right = vec3(chord.y, -chord.x, 0.0).try_normalize(0.0).unwrap_or(vec3(0.0, -1.0, 0.0));
    let flat: Vec<Vec3> = pts.iter().map(|p| vec3(p.x, p.y, 0.0)).collect();
    let mid_flat = vec3(mid.x, mid.y, 0.0);
    let da = 0.5 * ray_to_polygon(&mid_flat, &right, &flat);
    let db = 0.5 * ray_to_polygon(&mid_flat, &-right, &flat);
    let mut out = cage.clone();
    let b_a = out.vertices.len();
    let b_b = b_a + 1;
    let pa = mid_flat + right * da;
    let pb = mid_flat - right * db;
    out.vertices.push(vec3(pa.x, pa.y, back_z));
    out.vertices.push(vec3(pb.x, pb.y, back_z));
    out.fixed.insert(b_a);
    out.fixed.insert(b_b);
    for (arc, b) in [(&arc_a, b_a), (&arc_b, b_b)] {
        for &i in arc {
            out.triangles.push([ring[(i + 1) % m], ring[i], b]);
        }
    }
    // at hi the fans switch from b_a to b_b, at lo back again
    out.triangles.push([ring[hi], b_a, b_b]);
    out.triangles.push([ring[lo], b_b, b_a]);
    Ok(out)
}

/// Mesh triangles touching a vertex of the region.
pub fn region_triangles(mesh: &TriMesh, map: &FatPadMap, region: Region) -> Vec<usize> {
    let verts: BTreeSet<VertexId> = map.region_vertices(region).into_iter().collect();
    (0..mesh.triangle_count())
        .filter(|&t| mesh.triangles()[t].iter().any(|v| verts.contains(v)))
        .collect()
}

pub fn build_cage(mesh: &TriMesh, map: &FatPadMap, region: Region, params: &CageParams) -> Result<Cage, CageError> {
    build_cage_report(mesh, map, region, params).map(|(c, _)| c)
}

pub fn build_cage_report(mesh: &TriMesh, map: &FatPadMap, region: Region, params: &CageParams) -> Result<(Cage, CageReport), CageError> {
    params.validate()?;
    let front = front_surface(mesh, map, region)?;
    let tris = region_triangles(mesh, map, region);
    let inside_check: Vec<Vec3> = map.region_vertices(region).iter().map(|&v| mesh.position(v)).collect();
    let diag = mesh.bbox_diagonal();
    let mut offset = params.alpha(region) * diag;
    let mut last = (0, 0, 0);
    for it in 1..=params.max_iterations {
        let scaled = scale_cage(&front, mesh, map, params, offset);
        let cage = close_cage(&duplicate_and_fix_borders(&scaled, mesh, map, offset)?, mesh, params)?;
        let closed_ok = cage.check_invariants();
        let self_hits = cage.self_intersections();
        let hits = cage.mesh_intersections(mesh, &tris).len();
        let outside = inside_check
            .iter()
            .filter(|p| winding_number(p, &cage.vertices, &cage.triangles) < 0.5)
            .count();
        log::debug!(
            "{} cage, offset {offset:.4}: {hits} intersections, {outside} outside, {self_hits} self-intersections, {closed_ok:?}",
            region.as_str()
        );
        if closed_ok.is_ok() && self_hits == 0 && hits == 0 && outside == 0 {
            return Ok((
                cage,
                CageReport {
                    region,
                    iterations: it,
                    offset,
                },
            ));
        }
        last = (hits, outside, self_hits);
        if it < params.max_iterations {
            offset *= params.escalation;
        }
    }
    Err(CageError::ConstructionFailure {
        region: region.as_str(),
        iterations: params.max_iterations,
        offset,
        intersections: last.0,
        outside: last.1,
        self_intersections: last.2,
    })
}

/// Upper and lower cages, built concurrently.
pub fn build_both_cages(mesh: &TriMesh, map: &FatPadMap, params: &CageParams) -> Result<(Cage, Cage), CageError> {
    let (u, l) = rayon::join(
        || build_cage(mesh, map, Region::Upper, params),
        || build_cage(mesh, map, Region::Lower, params),
    );
    Ok((u?, l?))
}
