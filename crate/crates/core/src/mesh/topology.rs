use std::collections::HashMap;

use super::{TriangleId, VertexId};

/// Edge/face/vertex incidence for an indexed triangle list.
///
/// Edge `face_edges[f][k]` joins `triangles[f][k]` and `triangles[f][(k + 1) % 3]`.
#[derive(Debug, Clone)]
pub struct Topology {
    edges: Vec<[VertexId; 2]>,
    edge_faces: Vec<Vec<TriangleId>>,
    face_edges: Vec<[usize; 3]>,
    vertex_faces: Vec<Vec<TriangleId>>,
    vertex_neighbors: Vec<Vec<VertexId>>,
    edge_lookup: HashMap<(VertexId, VertexId), usize>,
}

impl Topology {
    pub fn build(vertex_count: usize, triangles: &[[usize; 3]]) -> Self {
        let mut edges = Vec::new();
        let mut edge_faces: Vec<Vec<TriangleId>> = Vec::new();
        let mut face_edges = Vec::with_capacity(triangles.len());
        let mut vertex_faces = vec![Vec::new(); vertex_count];
        let mut edge_lookup = HashMap::with_capacity(triangles.len() * 3 / 2);
        for (f, t) in triangles.iter().enumerate() {
            let mut fe = [0usize; 3];
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_faces.push(Vec::new());
                    edges.len() - 1
                });
                edge_faces[e].push(f);
                fe[k] = e;
                vertex_faces[a].push(f);
            }
            face_edges.push(fe);
        }
        let mut vertex_neighbors = vec![Vec::new(); vertex_count];
        for &[a, b] in &edges {
            vertex_neighbors[a].push(b);
            vertex_neighbors[b].push(a);
        }
        for n in &mut vertex_neighbors {
            n.sort_unstable();
        }
        Topology {
            edges,
            edge_faces,
            face_edges,
            vertex_faces,
            vertex_neighbors,
            edge_lookup,
        }
    }

    pub fn edges(&self) -> &[[VertexId; 2]] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_faces(&self, e: usize) -> &[TriangleId] {
        &self.edge_faces[e]
    }

    pub fn face_edges(&self, f: TriangleId) -> [usize; 3] {
        self.face_edges[f]
    }

    pub fn vertex_faces(&self, v: VertexId) -> &[TriangleId] {
        &self.vertex_faces[v]
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.vertex_neighbors[v]
    }

    pub fn find_edge(&self, a: VertexId, b: VertexId) -> Option<usize> {
        self.edge_lookup.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_faces[e].len() == 1
    }

    pub fn is_boundary_vertex(&self, v: VertexId) -> bool {
        self.vertex_neighbors[v].iter().any(|&u| {
            self.find_edge(v, u)
                .map(|e| self.is_boundary_edge(e))
                .unwrap_or(false)
        })
    }

    /// Every edge has exactly two incident faces.
    pub fn is_closed_manifold(&self) -> bool {
        self.edge_faces.iter().all(|f| f.len() == 2)
    }

    /// Connected component label per vertex (isolated vertices get their own).
    pub fn components(&self) -> Vec<usize> {
        let n = self.vertex_neighbors.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &u in &self.vertex_neighbors[v] {
                    if label[u] == usize::MAX {
                        label[u] = next;
                        stack.push(u);
                    }
                }
            }
            next += 1;
        }
        label
    }
}
