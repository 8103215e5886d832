//! Geodesic distances on triangle meshes.
//!
//! [`solve_from`] runs exact window propagation; [`oracle_refined_dijkstra`]
//! is a graph approximation that converges to the exact value from above and
//! serves as test oracle and as fallback for meshes the exact solver chokes on.

mod cache;
mod dijkstra;
mod exact;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::mesh::{MeshError, TriMesh, TriangleId, VertexId};

pub use cache::{GeodesicCache, CACHE_MAGIC};
pub use dijkstra::{refined_graph_field, GraphField};
pub use exact::{propagate, WindowField, WindowRecord};

#[derive(Debug, Error, PartialEq)]
pub enum GeodesicError {
    #[error("source vertex {0} out of range ({1} vertices)")]
    InvalidSource(VertexId, usize),
    #[error("triangle {0} out of range ({1} triangles)")]
    InvalidTriangle(TriangleId, usize),
    #[error("barycentric coordinates must be non-negative and sum to 1, got {0:?}")]
    InvalidBarycentric([f64; 3]),
    #[error("mesh rebuild failed: {0}")]
    Mesh(#[from] MeshError),
    #[error("cache file: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeodesicMethod {
    Exact,
    RefinedDijkstra,
}

/// Point on the surface: a triangle and barycentric weights of its corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub triangle: TriangleId,
    pub barycentric: [f64; 3],
}

impl SurfacePoint {
    pub fn position(&self, mesh: &TriMesh) -> Vec3 {
        let [a, b, c] = mesh.triangle_points(self.triangle);
        a * self.barycentric[0] + b * self.barycentric[1] + c * self.barycentric[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeodesicSource {
    Vertex(VertexId),
    Point(SurfacePoint),
}

/// Distances from one source to every vertex. Unreachable vertices hold
/// `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicField {
    pub source: GeodesicSource,
    pub distances: Vec<f64>,
    pub method: GeodesicMethod,
}

impl GeodesicField {
    pub fn distance(&self, v: VertexId) -> f64 {
        self.distances[v]
    }

    pub fn is_reachable(&self, v: VertexId) -> bool {
        self.distances[v].is_finite()
    }
}

/// Distance queries at vertices and at points along edges.
pub trait DistanceField: Send + Sync {
    fn vertex(&self, v: VertexId) -> f64;
    /// Distance at `a + t (b - a)` on the mesh edge `(a, b)`.
    fn edge_point(&self, a: VertexId, b: VertexId, t: f64) -> f64;
}

fn check_source(mesh: &TriMesh, source: VertexId) -> Result<(), GeodesicError> {
    if source >= mesh.vertex_count() {
        return Err(GeodesicError::InvalidSource(source, mesh.vertex_count()));
    }
    Ok(())
}

/// Exact geodesic distances from a vertex.
pub fn solve_from(mesh: &TriMesh, source: VertexId) -> Result<GeodesicField, GeodesicError> {
    check_source(mesh, source)?;
    let field = propagate(mesh, source, f64::INFINITY);
    Ok(GeodesicField {
        source: GeodesicSource::Vertex(source),
        distances: field.vertex_distances,
        method: GeodesicMethod::Exact,
    })
}

/// Exact window field from a vertex, optionally bounded: values up to
/// `max_distance` are exact, larger ones are upper bounds or infinite.
pub fn window_field(mesh: &TriMesh, source: VertexId, max_distance: Option<f64>) -> Result<WindowField, GeodesicError> {
    check_source(mesh, source)?;
    Ok(propagate(mesh, source, max_distance.unwrap_or(f64::INFINITY)))
}

/// Snap tolerance on barycentric coordinates.
const BARY_EPS: f64 = 1e-12;

fn check_point(mesh: &TriMesh, point: &SurfacePoint) -> Result<(), GeodesicError> {
    if point.triangle >= mesh.triangle_count() {
        return Err(GeodesicError::InvalidTriangle(point.triangle, mesh.triangle_count()));
    }
    let b = point.barycentric;
    let sum: f64 = b.iter().sum();
    if b.iter().any(|&x| !(x >= -BARY_EPS)) || (sum - 1.0).abs() > 1e-9 {
        return Err(GeodesicError::InvalidBarycentric(b));
    }
    Ok(())
}

/// The mesh with `point` inserted as an extra vertex (last index). Returns
/// `Err(v)` instead when the point coincides with vertex `v`.
fn insert_point(mesh: &TriMesh, point: &SurfacePoint) -> Result<Result<TriMesh, VertexId>, GeodesicError> {
    let tri = mesh.triangles()[point.triangle];
    let b = point.barycentric;
    let nonzero: Vec<usize> = (0..3).filter(|&k| b[k] > BARY_EPS).collect();
    if nonzero.len() == 1 {
        return Ok(Err(tri[nonzero[0]]));
    }
    let q = mesh.vertex_count();
    let mut positions = mesh.positions().to_vec();
    positions.push(point.position(mesh));
    let mut triangles = Vec::with_capacity(mesh.triangle_count() + 3);
    if nonzero.len() == 3 {
        for (t, &f) in mesh.triangles().iter().enumerate() {
            if t == point.triangle {
                triangles.push([f[0], f[1], q]);
                triangles.push([f[1], f[2], q]);
                triangles.push([f[2], f[0], q]);
            } else {
                triangles.push(f);
            }
        }
    } else {
        let (u, v) = (tri[nonzero[0]], tri[nonzero[1]]);
        for &f in mesh.triangles() {
            let pu = f.iter().position(|&x| x == u);
            let pv = f.iter().position(|&x| x == v);
            match (pu, pv) {
                (Some(i), Some(j)) => {
                    // split the edge inside this face, keeping orientation
                    let (i, j) = if (i + 1) % 3 == j { (i, j) } else { (j, i) };
                    let w = f[3 - i - j];
                    triangles.push([f[i], q, w]);
                    triangles.push([q, f[j], w]);
                }
                _ => triangles.push(f),
            }
        }
    }
    Ok(Ok(TriMesh::new(positions, triangles)?))
}

/// Exact distances from an arbitrary surface point, by temporary vertex insertion.
pub fn solve_from_point(mesh: &TriMesh, point: SurfacePoint) -> Result<GeodesicField, GeodesicError> {
    check_point(mesh, &point)?;
    let mut field = match insert_point(mesh, &point)? {
        Err(v) => solve_from(mesh, v)?,
        Ok(split) => {
            let mut f = solve_from(&split, mesh.vertex_count())?;
            f.distances.truncate(mesh.vertex_count());
            f
        }
    };
    field.source = GeodesicSource::Point(point);
    Ok(field)
}

/// Dijkstra on vertices plus `refinement` points per edge, with straight
/// chords between all nodes sharing a face.
pub fn oracle_refined_dijkstra(mesh: &TriMesh, source: VertexId, refinement: usize) -> Result<GeodesicField, GeodesicError> {
    check_source(mesh, source)?;
    let g = refined_graph_field(mesh, source, refinement);
    Ok(GeodesicField {
        source: GeodesicSource::Vertex(source),
        distances: g.vertex_distances().to_vec(),
        method: GeodesicMethod::RefinedDijkstra,
    })
}

/// Either solver behind the common query interface.
pub fn distance_field(
    mesh: &TriMesh,
    source: VertexId,
    method: GeodesicMethod,
    max_distance: Option<f64>,
) -> Result<Box<dyn DistanceField>, GeodesicError> {
    check_source(mesh, source)?;
    Ok(match method {
        GeodesicMethod::Exact => Box::new(propagate(mesh, source, max_distance.unwrap_or(f64::INFINITY))),
        GeodesicMethod::RefinedDijkstra => Box::new(refined_graph_field(mesh, source, DEFAULT_FALLBACK_REFINEMENT)),
    })
}

/// Edge subdivision used when the graph solver stands in for the exact one.
pub const DEFAULT_FALLBACK_REFINEMENT: usize = 3;
