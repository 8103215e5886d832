//! Refined-graph Dijkstra: vertices plus `k` evenly spaced points on every
//! edge, connected by straight chords across each face. Every graph path is
//! a real surface path, so the result bounds the exact distance from above.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use crate::geometry::Vec3;
use crate::mesh::{TriMesh, VertexId};

use super::DistanceField;

#[derive(Debug, Clone)]
pub struct GraphField {
    mesh: TriMesh,
    k: usize,
    dist: Vec<f64>,
}

impl GraphField {
    pub fn vertex_distances(&self) -> &[f64] {
        &self.dist[..self.mesh.vertex_count()]
    }

    pub fn refinement(&self) -> usize {
        self.k
    }

    fn node_position(&self, node: usize) -> Vec3 {
        node_position(&self.mesh, self.k, node)
    }
}

fn node_position(mesh: &TriMesh, k: usize, node: usize) -> Vec3 {
    let n = mesh.vertex_count();
    if node < n {
        return mesh.position(node);
    }
    let e = (node - n) / k;
    let j = (node - n) % k;
    let [a, b] = mesh.topology().edges()[e];
    let t = (j + 1) as f64 / (k + 1) as f64;
    mesh.position(a) + (mesh.position(b) - mesh.position(a)) * t
}

fn face_nodes(mesh: &TriMesh, k: usize, f: usize, out: &mut Vec<usize>) {
    out.clear();
    out.extend_from_slice(&mesh.triangles()[f]);
    let n = mesh.vertex_count();
    for &e in &mesh.topology().face_edges(f) {
        out.extend((0..k).map(|j| n + e * k + j));
    }
}

pub fn refined_graph_field(mesh: &TriMesh, source: VertexId, refinement: usize) -> GraphField {
    let k = refinement;
    let topo = mesh.topology();
    let n = mesh.vertex_count();
    let total = n + topo.edge_count() * k;
    let mut dist = vec![f64::INFINITY; total];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((OrderedFloat(0.0), source)));
    let mut nodes = Vec::new();
    let mut faces: Vec<usize> = Vec::new();
    while let Some(Reverse((OrderedFloat(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        let pu = node_position(mesh, k, u);
        faces.clear();
        if u < n {
            faces.extend_from_slice(topo.vertex_faces(u));
        } else {
            faces.extend_from_slice(topo.edge_faces((u - n) / k));
        }
        for &f in &faces {
            face_nodes(mesh, k, f, &mut nodes);
            for &v in &nodes {
                if v == u {
                    continue;
                }
                let nd = d + (node_position(mesh, k, v) - pu).norm();
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((OrderedFloat(nd), v)));
                }
            }
        }
    }
    GraphField {
        mesh: mesh.clone(),
        k,
        dist,
    }
}

impl DistanceField for GraphField {
    fn vertex(&self, v: VertexId) -> f64 {
        self.dist[v]
    }

    fn edge_point(&self, a: VertexId, b: VertexId, t: f64) -> f64 {
        let topo = self.mesh.topology();
        let Some(e) = topo.find_edge(a, b) else {
            return f64::INFINITY;
        };
        let p = self.mesh.position(a) + (self.mesh.position(b) - self.mesh.position(a)) * t;
        let mut best = f64::INFINITY;
        let mut nodes = Vec::new();
        for &f in topo.edge_faces(e) {
            face_nodes(&self.mesh, self.k, f, &mut nodes);
            for &v in &nodes {
                best = best.min(self.dist[v] + (self.node_position(v) - p).norm());
            }
        }
        best
    }
}
