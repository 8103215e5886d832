//! Exact polyhedral geodesics by continuous-Dijkstra window propagation.
//!
//! Every mesh edge carries a lower envelope of windows. A window is an
//! interval `[b0, b1]` of the edge (measured from the edge's first vertex)
//! together with the unfolded position of the pseudo-source it is seen from,
//! stored in the edge frame as `(px, py)` with `py >= 0` on the side of the
//! face the geodesics arrived through, and `sigma`, the distance from the
//! real source to that pseudo-source. Windows are propagated across faces in
//! order of their minimum distance; where two windows overlap on an edge the
//! pointwise minimum wins and the loser is trimmed. Saddle and boundary
//! vertices become pseudo-sources once their distance is known.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use crate::geometry::Vec3;
use crate::mesh::{TriMesh, VertexId};

use super::DistanceField;

/// One window in a finished field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRecord {
    pub b0: f64,
    pub b1: f64,
    pub px: f64,
    pub py: f64,
    pub sigma: f64,
}

impl WindowRecord {
    #[inline]
    pub fn distance_at(&self, x: f64) -> f64 {
        let dx = x - self.px;
        self.sigma + (dx * dx + self.py * self.py).sqrt()
    }
}

/// Result of an exact propagation: vertex distances plus the window envelope
/// of every edge, which answers distance queries at arbitrary edge points.
#[derive(Debug, Clone)]
pub struct WindowField {
    pub(crate) vertex_distances: Vec<f64>,
    pub(crate) edge_windows: Vec<Vec<WindowRecord>>,
    pub(crate) edges: Vec<[VertexId; 2]>,
    pub(crate) edge_lengths: Vec<f64>,
    pub(crate) edge_lookup: std::collections::HashMap<(VertexId, VertexId), usize>,
    /// Distances above this were not settled (bounded propagation).
    pub(crate) horizon: f64,
}

impl WindowField {
    pub(crate) fn from_parts(
        mesh: &TriMesh,
        vertex_distances: Vec<f64>,
        edge_windows: Vec<Vec<WindowRecord>>,
        horizon: f64,
    ) -> Self {
        let topo = mesh.topology();
        let p = mesh.positions();
        let edges = topo.edges().to_vec();
        let edge_lengths = edges.iter().map(|&[a, b]| (p[b] - p[a]).norm()).collect();
        let edge_lookup = edges.iter().enumerate().map(|(e, &[a, b])| ((a, b), e)).collect();
        WindowField {
            vertex_distances,
            edge_windows,
            edges,
            edge_lengths,
            edge_lookup,
            horizon,
        }
    }

    pub fn vertex_distances(&self) -> &[f64] {
        &self.vertex_distances
    }

    pub fn window_count(&self) -> usize {
        self.edge_windows.iter().map(Vec::len).sum()
    }

    /// Distances at or below the horizon are exact; larger values are upper bounds.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn edge_windows(&self, e: usize) -> &[WindowRecord] {
        &self.edge_windows[e]
    }

    /// Distance at parameter `x` (length units from the edge's first vertex).
    pub fn edge_distance(&self, e: usize, x: f64) -> f64 {
        let [a, b] = self.edges[e];
        let len = self.edge_lengths[e];
        let tol = 1e-9 * len;
        let mut best = (self.vertex_distances[a] + x).min(self.vertex_distances[b] + (len - x));
        for w in &self.edge_windows[e] {
            if x >= w.b0 - tol && x <= w.b1 + tol {
                best = best.min(w.distance_at(x));
            }
        }
        best
    }
}

impl DistanceField for WindowField {
    fn vertex(&self, v: VertexId) -> f64 {
        self.vertex_distances[v]
    }

    fn edge_point(&self, a: VertexId, b: VertexId, t: f64) -> f64 {
        let Some(&e) = self.edge_lookup.get(&(a.min(b), a.max(b))) else {
            return f64::INFINITY;
        };
        let len = self.edge_lengths[e];
        let x = if self.edges[e][0] == a { t * len } else { (1.0 - t) * len };
        self.edge_distance(e, x)
    }
}

#[derive(Debug, Clone)]
struct Window {
    edge: usize,
    b0: f64,
    b1: f64,
    px: f64,
    py: f64,
    sigma: f64,
    from_face: usize,
    alive: bool,
    propagated: bool,
}

impl Window {
    #[inline]
    fn distance_at(&self, x: f64) -> f64 {
        let dx = x - self.px;
        self.sigma + (dx * dx + self.py * self.py).sqrt()
    }

    fn min_distance(&self) -> f64 {
        self.distance_at(self.px.clamp(self.b0, self.b1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Window(usize),
    Vertex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Owner {
    New,
    Old,
}

struct Propagator<'m> {
    mesh: &'m TriMesh,
    edges: &'m [[VertexId; 2]],
    edge_len: Vec<f64>,
    windows: Vec<Window>,
    edge_windows: Vec<Vec<usize>>,
    dist: Vec<f64>,
    emitted: Vec<f64>,
    pseudo_source: Vec<bool>,
    queue: BinaryHeap<Reverse<(OrderedFloat<f64>, u64, Event)>>,
    seq: u64,
    tol: f64,
}

/// Total interior angle at every vertex.
fn vertex_angle_sums(mesh: &TriMesh) -> Vec<f64> {
    let mut sums = vec![0.0; mesh.vertex_count()];
    let p = mesh.positions();
    for t in mesh.triangles() {
        for k in 0..3 {
            let v = t[k];
            let a = p[t[(k + 1) % 3]] - p[v];
            let b = p[t[(k + 2) % 3]] - p[v];
            let denom = a.norm() * b.norm();
            if denom > 0.0 {
                sums[v] += (a.dot(&b) / denom).clamp(-1.0, 1.0).acos();
            }
        }
    }
    sums
}

impl<'m> Propagator<'m> {
    fn new(mesh: &'m TriMesh) -> Self {
        let topo = mesh.topology();
        let edges = topo.edges();
        let p = mesh.positions();
        let edge_len: Vec<f64> = edges.iter().map(|&[a, b]| (p[b] - p[a]).norm()).collect();
        let angles = vertex_angle_sums(mesh);
        let pseudo_source = (0..mesh.vertex_count())
            .map(|v| angles[v] > 2.0 * std::f64::consts::PI - 1e-6 || topo.is_boundary_vertex(v))
            .collect();
        let scale = mesh.bbox_diagonal().max(f64::MIN_POSITIVE);
        Propagator {
            mesh,
            edges,
            edge_len,
            windows: Vec::new(),
            edge_windows: vec![Vec::new(); edges.len()],
            dist: vec![f64::INFINITY; mesh.vertex_count()],
            emitted: vec![f64::INFINITY; mesh.vertex_count()],
            pseudo_source,
            queue: BinaryHeap::new(),
            seq: 0,
            tol: 1e-13 * scale,
        }
    }

    fn push(&mut self, key: f64, ev: Event) {
        self.seq += 1;
        self.queue.push(Reverse((OrderedFloat(key), self.seq, ev)));
    }

    fn pos(&self, v: VertexId) -> Vec3 {
        self.mesh.positions()[v]
    }

    fn third_vertex(&self, f: usize, a: VertexId, b: VertexId) -> VertexId {
        let t = self.mesh.triangles()[f];
        *t.iter().find(|&&v| v != a && v != b).expect("non-degenerate face")
    }

    fn update_vertex(&mut self, v: VertexId, d: f64) {
        if d < self.dist[v] - self.tol {
            self.dist[v] = d;
            if self.pseudo_source[v] {
                self.push(d, Event::Vertex(v));
            }
        } else if d < self.dist[v] {
            self.dist[v] = d;
        }
    }

    /// Windows from a (pseudo-)source vertex onto the edges opposite it.
    fn emit_from_vertex(&mut self, v: VertexId, sigma: f64) {
        let topo = self.mesh.topology();
        let sp = self.pos(v);
        for &f in topo.vertex_faces(v) {
            let t = self.mesh.triangles()[f];
            let k = t.iter().position(|&x| x == v).expect("incident face");
            let e = topo.face_edges(f)[(k + 1) % 3];
            let [g0, g1] = self.edges[e];
            let len = self.edge_len[e];
            if len <= 0.0 {
                continue;
            }
            let o = self.pos(g0);
            let dir = (self.pos(g1) - o) / len;
            let rel = sp - o;
            let px = rel.dot(&dir);
            let py = (rel - dir * px).norm();
            let w = Window {
                edge: e,
                b0: 0.0,
                b1: len,
                px,
                py,
                sigma,
                from_face: f,
                alive: true,
                propagated: false,
            };
            self.insert(w);
        }
    }

    /// Crossing points of `D_new(x) = D_old(x)` (candidates; callers test sides).
    fn crossings(n: &Window, o: &Window, lo: f64, hi: f64) -> Vec<f64> {
        let (p1, h1, d1) = (n.px, n.py, n.sigma);
        let (p2, h2, d2) = (o.px, o.py, o.sigma);
        let delta = d2 - d1;
        let alpha = 2.0 * (p2 - p1);
        let beta = p1 * p1 + h1 * h1 - p2 * p2 - h2 * h2 - delta * delta;
        let qa = alpha * alpha - 4.0 * delta * delta;
        let qb = 2.0 * alpha * beta + 8.0 * delta * delta * p2;
        let qc = beta * beta - 4.0 * delta * delta * (p2 * p2 + h2 * h2);
        let mut roots = Vec::with_capacity(2);
        let scale = qa.abs().max(qb.abs()).max(qc.abs());
        if scale == 0.0 {
            return roots;
        }
        if qa.abs() <= 1e-14 * scale {
            if qb.abs() > 0.0 {
                roots.push(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let s = disc.sqrt();
                // numerically stable pair
                let q = -0.5 * (qb + qb.signum() * s);
                if q != 0.0 {
                    roots.push(q / qa);
                    roots.push(qc / q);
                } else {
                    roots.push(-qb / (2.0 * qa));
                }
            }
        }
        roots.retain(|&r| r.is_finite() && r > lo && r < hi);
        roots.sort_by(f64::total_cmp);
        roots
    }

    /// Merge a candidate window into its edge's envelope.
    fn insert(&mut self, cand: Window) {
        let e = cand.edge;
        let len = self.edge_len[e];
        let min_len = 1e-11 * len;
        if cand.b1 - cand.b0 <= min_len {
            return;
        }
        let [g0, g1] = self.edges[e];
        let end_tol = 1e-9 * len;
        if cand.b0 <= end_tol {
            self.update_vertex(g0, cand.distance_at(0.0));
        }
        if cand.b1 >= len - end_tol {
            self.update_vertex(g1, cand.distance_at(len));
        }

        // Pieces of [b0, b1] where the candidate beats the envelope.
        let mut won: Vec<(f64, f64)> = Vec::new();
        let push_won = |a: f64, b: f64, won: &mut Vec<(f64, f64)>| {
            if b <= a {
                return;
            }
            if let Some(last) = won.last_mut() {
                if (a - last.1).abs() <= 1e-15 * len.max(1.0) {
                    last.1 = b;
                    return;
                }
            }
            won.push((a, b));
        };
        let mut overlapping = Vec::new();
        let mut cursor = cand.b0;
        for &id in &self.edge_windows[e] {
            let old = &self.windows[id];
            if old.b1 <= cand.b0 || old.b0 >= cand.b1 {
                continue;
            }
            overlapping.push(id);
            if old.b0 > cursor {
                push_won(cursor, old.b0, &mut won);
            }
            let lo = cursor.max(old.b0);
            let hi = cand.b1.min(old.b1);
            if hi > lo {
                let mut cuts = vec![lo];
                cuts.extend(Self::crossings(&cand, old, lo, hi));
                cuts.push(hi);
                for pair in cuts.windows(2) {
                    let mid = 0.5 * (pair[0] + pair[1]);
                    let owner = if cand.distance_at(mid) < old.distance_at(mid) - self.tol {
                        Owner::New
                    } else {
                        Owner::Old
                    };
                    if owner == Owner::New {
                        push_won(pair[0], pair[1], &mut won);
                    }
                }
            }
            cursor = cursor.max(hi);
        }
        if cursor < cand.b1 {
            push_won(cursor, cand.b1, &mut won);
        }
        won.retain(|&(a, b)| b - a > min_len);
        if won.is_empty() {
            return;
        }

        // Trim the losers.
        let mut list: Vec<usize> = self.edge_windows[e]
            .iter()
            .copied()
            .filter(|id| !overlapping.contains(id))
            .collect();
        for id in overlapping {
            let old = self.windows[id].clone();
            let mut remaining = vec![(old.b0, old.b1)];
            for &(a, b) in &won {
                let mut next = Vec::with_capacity(remaining.len() + 1);
                for (r0, r1) in remaining {
                    if b <= r0 || a >= r1 {
                        next.push((r0, r1));
                        continue;
                    }
                    if a > r0 {
                        next.push((r0, a));
                    }
                    if b < r1 {
                        next.push((b, r1));
                    }
                }
                remaining = next;
            }
            if remaining.len() == 1 && remaining[0] == (old.b0, old.b1) {
                list.push(id);
                continue;
            }
            self.windows[id].alive = false;
            for (r0, r1) in remaining {
                if r1 - r0 <= min_len {
                    continue;
                }
                let mut piece = old.clone();
                piece.b0 = r0;
                piece.b1 = r1;
                let nid = self.windows.len();
                let key = piece.min_distance();
                let propagated = piece.propagated;
                self.windows.push(piece);
                list.push(nid);
                if !propagated {
                    self.push(key, Event::Window(nid));
                }
            }
        }
        for (a, b) in won {
            let mut w = cand.clone();
            w.b0 = a;
            w.b1 = b;
            w.alive = true;
            w.propagated = false;
            let nid = self.windows.len();
            let key = w.min_distance();
            self.windows.push(w);
            list.push(nid);
            self.push(key, Event::Window(nid));
        }
        let windows = &self.windows;
        list.sort_by(|&x, &y| windows[x].b0.total_cmp(&windows[y].b0));
        self.edge_windows[e] = list;
    }

    fn propagate(&mut self, id: usize) {
        self.windows[id].propagated = true;
        let w = self.windows[id].clone();
        if w.py <= 1e-12 * self.edge_len[w.edge] {
            return;
        }
        let topo = self.mesh.topology();
        let [ia, ib] = self.edges[w.edge];
        let len = self.edge_len[w.edge];
        let a3 = self.pos(ia);
        let dir = (self.pos(ib) - a3) / len;
        for &f in topo.edge_faces(w.edge) {
            if f == w.from_face {
                continue;
            }
            let ic = self.third_vertex(f, ia, ib);
            let rel = self.pos(ic) - a3;
            let cx = rel.dot(&dir);
            let cy = (rel - dir * cx).norm();
            if cy <= 0.0 {
                continue;
            }
            let c2 = (cx, cy);
            let (px, py) = (w.px, -w.py);
            // where the ray from the pseudo-source through C crosses the edge line
            let xc = px + (cx - px) * (-py) / (cy - py);
            // rays through [b0, xc] exit through AC, through [xc, b1] through CB
            let targets = [((0.0, 0.0), c2, ia, ic, w.b0, w.b1.min(xc)), (c2, (len, 0.0), ic, ib, w.b0.max(xc), w.b1)];
            for (u, v, gu, gv, x0, x1) in targets {
                if x1 - x0 <= 0.0 {
                    continue;
                }
                let hit = |x: f64| -> f64 {
                    let dx = v.0 - u.0;
                    let dy = v.1 - u.1;
                    let num = (x - px) * (u.1 - py) - (u.0 - px) * (-py);
                    let den = dx * (-py) - (x - px) * dy;
                    if den == 0.0 {
                        return if x <= x0 { 0.0 } else { 1.0 };
                    }
                    // (U + tD - P) parallel to (x - px, -py)
                    (num / den).clamp(0.0, 1.0)
                };
                let t0 = hit(x0);
                let t1 = hit(x1);
                let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
                let Some(ne) = topo.find_edge(gu, gv) else {
                    continue;
                };
                let [h0, _] = self.edges[ne];
                let nlen = self.edge_len[ne];
                if nlen <= 0.0 {
                    continue;
                }
                let (origin, ndir) = if h0 == gu {
                    (u, ((v.0 - u.0) / nlen, (v.1 - u.1) / nlen))
                } else {
                    (v, ((u.0 - v.0) / nlen, (u.1 - v.1) / nlen))
                };
                let (s0, s1) = if h0 == gu { (t0 * nlen, t1 * nlen) } else { ((1.0 - t1) * nlen, (1.0 - t0) * nlen) };
                let rx = px - origin.0;
                let ry = py - origin.1;
                let npx = rx * ndir.0 + ry * ndir.1;
                let npy = (rx * ndir.1 - ry * ndir.0).abs();
                self.insert(Window {
                    edge: ne,
                    b0: s0.max(0.0),
                    b1: s1.min(nlen),
                    px: npx,
                    py: npy,
                    sigma: w.sigma,
                    from_face: f,
                    alive: true,
                    propagated: false,
                });
            }
        }
    }

    fn run(&mut self, source: VertexId, max_distance: f64) -> f64 {
        self.dist[source] = 0.0;
        self.emitted[source] = 0.0;
        self.emit_from_vertex(source, 0.0);
        let mut horizon = f64::INFINITY;
        while let Some(Reverse((OrderedFloat(key), _, ev))) = self.queue.pop() {
            if key > max_distance {
                horizon = key;
                break;
            }
            match ev {
                Event::Window(id) => {
                    let w = &self.windows[id];
                    if !w.alive || w.propagated {
                        continue;
                    }
                    self.propagate(id);
                }
                Event::Vertex(v) => {
                    let d = self.dist[v];
                    if d < self.emitted[v] - self.tol {
                        self.emitted[v] = d;
                        self.emit_from_vertex(v, d);
                    }
                }
            }
        }
        horizon
    }
}

/// Exact distances from vertex `source`; propagation stops once every
/// remaining front is farther than `max_distance`.
pub fn propagate(mesh: &TriMesh, source: VertexId, max_distance: f64) -> WindowField {
    let mut prop = Propagator::new(mesh);
    let horizon = prop.run(source, max_distance);
    let mut edge_windows = vec![Vec::new(); prop.edges.len()];
    for (e, ids) in prop.edge_windows.iter().enumerate() {
        edge_windows[e] = ids
            .iter()
            .map(|&id| {
                let w = &prop.windows[id];
                WindowRecord {
                    b0: w.b0,
                    b1: w.b1,
                    px: w.px,
                    py: w.py,
                    sigma: w.sigma,
                }
            })
            .collect();
    }
    let dist = std::mem::take(&mut prop.dist);
    WindowField::from_parts(mesh, dist, edge_windows, horizon)
}
