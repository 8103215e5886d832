//! Indexed triangle meshes: storage, adjacency, normals, OBJ I/O and the
//! Hausdorff-RMS comparison metric.

mod bvh;
mod hausdorff;
mod obj;
mod topology;

use std::sync::OnceLock;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{triangle_cross, Aabb, Vec3};

pub use bvh::TriangleBvh;
pub use hausdorff::{hausdorff_rms, vertex_distances_to_surface, HausdorffReport, SamplingParams};
pub use obj::{load_obj, save_obj};
pub use topology::Topology;

pub type VertexId = usize;
pub type TriangleId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh has no vertices")]
    Empty,
    #[error("mesh has no triangles")]
    NoTriangles,
    #[error("triangle {triangle} references vertex {vertex} but the mesh has {count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        vertex: usize,
        count: usize,
    },
    #[error("triangle {0} repeats a vertex index")]
    DegenerateTriangle(usize),
    #[error("vertex position {0} is not finite")]
    NonFinite(usize),
}

/// Indexed triangle surface. Immutable once built; derived adjacency is
/// computed lazily and shared.
#[derive(Debug, Clone)]
pub struct TriMesh {
    positions: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    isolated: Vec<VertexId>,
    topology: OnceLock<Topology>,
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.positions == other.positions && self.triangles == other.triangles
    }
}

impl TriMesh {
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if positions.is_empty() {
            return Err(MeshError::Empty);
        }
        if let Some(i) = positions.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(MeshError::NonFinite(i));
        }
        let n = positions.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        vertex: v,
                        count: n,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateTriangle(t));
            }
        }
        let (normals, isolated) = compute_vertex_normals(&positions, &triangles);
        Ok(TriMesh {
            positions,
            triangles,
            normals,
            isolated,
            topology: OnceLock::new(),
        })
    }

    /// Same connectivity, new positions.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Self, MeshError> {
        TriMesh::new(positions, self.triangles.clone())
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, v: VertexId) -> Vec3 {
        self.positions[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex_normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn normal(&self, v: VertexId) -> Vec3 {
        self.normals[v]
    }

    /// Vertices that have no incident non-degenerate triangle; their normal is zero.
    pub fn isolated_vertices(&self) -> &[VertexId] {
        &self.isolated
    }

    pub fn triangle_points(&self, t: TriangleId) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.positions[a], self.positions[b], self.positions[c]]
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(self.positions.iter())
    }

    pub fn bbox_diagonal(&self) -> f64 {
        self.bounding_box().diagonal()
    }

    pub fn topology(&self) -> &Topology {
        self.topology
            .get_or_init(|| Topology::build(self.positions.len(), &self.triangles))
    }

    /// Hash over vertex count and triangle list; positions excluded.
    pub fn topology_fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.positions.len() as u64).to_le_bytes());
        h.update((self.triangles.len() as u64).to_le_bytes());
        for t in &self.triangles {
            for &v in t {
                h.update((v as u64).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Hash over positions (bit patterns) and triangles.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.topology_fingerprint().as_bytes());
        for p in &self.positions {
            for c in p.iter() {
                h.update(c.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn surface_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| 0.5 * triangle_cross(&self.positions[t[0]], &self.positions[t[1]], &self.positions[t[2]]).norm())
            .sum()
    }
}

/// Area-weighted vertex normals. Zero-area triangles contribute nothing;
/// vertices left without any contribution get a zero normal and are reported.
pub fn compute_vertex_normals(positions: &[Vec3], triangles: &[[usize; 3]]) -> (Vec<Vec3>, Vec<VertexId>) {
    let mut acc = vec![Vec3::zeros(); positions.len()];
    for t in triangles {
        let n = triangle_cross(&positions[t[0]], &positions[t[1]], &positions[t[2]]);
        if n.norm_squared() == 0.0 || !n.norm_squared().is_finite() {
            continue;
        }
        for &v in t {
            acc[v] += n;
        }
    }
    let mut isolated = Vec::new();
    for (v, n) in acc.iter_mut().enumerate() {
        let len = n.norm();
        if len > 0.0 {
            *n /= len;
        } else {
            *n = Vec3::zeros();
            isolated.push(v);
        }
    }
    (acc, isolated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vec3;
    use crate::shapes::icosphere;

    #[test]
    fn rejects_bad_indices() {
        let pos = vec![vec3(0., 0., 0.), vec3(1., 0., 0.), vec3(0., 1., 0.)];
        assert!(matches!(
            TriMesh::new(pos.clone(), vec![[0, 1, 5]]),
            Err(MeshError::IndexOutOfRange { vertex: 5, .. })
        ));
        assert_eq!(TriMesh::new(pos, vec![[0, 1, 1]]), Err(MeshError::DegenerateTriangle(0)));
        assert_eq!(TriMesh::new(vec![], vec![]), Err(MeshError::Empty));
    }

    #[test]
    fn flat_grid_normals_point_up() {
        let m = crate::shapes::grid(4, 4, 0.5);
        for n in m.vertex_normals() {
            assert!((n - vec3(0., 0., 1.)).norm() < 1e-12);
        }
    }

    #[test]
    fn icosphere_normals_are_radial() {
        let m = icosphere(3, 1.0);
        for (p, n) in m.positions().iter().zip(m.vertex_normals()) {
            let cos = p.normalize().dot(n).min(1.0);
            assert!(cos.acos().to_degrees() < 5.0);
            assert!((n.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn isolated_vertex_is_flagged() {
        let pos = vec![vec3(0., 0., 0.), vec3(1., 0., 0.), vec3(0., 1., 0.), vec3(5., 5., 5.)];
        let m = TriMesh::new(pos, vec![[0, 1, 2]]).unwrap();
        assert_eq!(m.isolated_vertices(), &[3]);
        assert_eq!(m.normal(3), Vec3::zeros());
    }

    #[test]
    fn normals_invariant_under_uniform_scaling() {
        let m = icosphere(2, 1.0);
        let scaled = m
            .with_positions(m.positions().iter().map(|p| p * 7.5).collect())
            .unwrap();
        for (a, b) in m.vertex_normals().iter().zip(scaled.vertex_normals()) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn degenerate_triangle_excluded_from_normals() {
        // collinear triangle (zero area) next to a proper one
        let pos = vec![vec3(0., 0., 0.), vec3(1., 0., 0.), vec3(0., 1., 0.), vec3(2., 0., 0.)];
        let m = TriMesh::new(pos, vec![[0, 1, 2], [0, 1, 3]]).unwrap();
        assert!(m.normal(0).iter().all(|c| c.is_finite()));
        assert_eq!(m.isolated_vertices(), &[3]);
    }

    #[test]
    fn fingerprints_separate_topology_and_content() {
        let m = icosphere(1, 1.0);
        let moved = m
            .with_positions(m.positions().iter().map(|p| p * 2.0).collect())
            .unwrap();
        assert_eq!(m.topology_fingerprint(), moved.topology_fingerprint());
        assert_ne!(m.content_hash(), moved.content_hash());
    }
}
