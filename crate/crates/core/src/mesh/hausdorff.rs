//! Surface-to-surface distance metric: root mean square of point-to-surface
//! distances over area-proportional samples, symmetrized by taking the max of
//! the two directed values.

use serde::{Deserialize, Serialize};

use super::{MeshError, TriMesh, TriangleBvh};
use crate::geometry::{triangle_area, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    /// Average number of samples per triangle; the total budget is spread
    /// over triangles proportionally to their area.
    pub samples_per_triangle: usize,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams { samples_per_triangle: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HausdorffReport {
    pub a_to_b: f64,
    pub b_to_a: f64,
    pub symmetric: f64,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Deterministic stratified samples: triangle chosen by cumulative area,
/// barycentrics from a Halton pair warped to the triangle.
fn sample_points(mesh: &TriMesh, params: &SamplingParams) -> Vec<Vec3> {
    let areas: Vec<f64> = (0..mesh.triangle_count())
        .map(|t| {
            let [a, b, c] = mesh.triangle_points(t);
            triangle_area(&a, &b, &c)
        })
        .collect();
    let total: f64 = areas.iter().sum();
    let n = (params.samples_per_triangle.max(1) * mesh.triangle_count()).max(1);
    if total <= 0.0 {
        return mesh.positions().to_vec();
    }
    let mut out = Vec::with_capacity(n);
    let mut tri = 0usize;
    let mut cum = areas[0];
    for k in 0..n {
        let target = (k as f64 + 0.5) / n as f64 * total;
        while cum < target && tri + 1 < areas.len() {
            tri += 1;
            cum += areas[tri];
        }
        let r1 = radical_inverse(k as u64 + 1, 2);
        let r2 = radical_inverse(k as u64 + 1, 3);
        let s = r1.sqrt();
        let [a, b, c] = mesh.triangle_points(tri);
        out.push(a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2));
    }
    out
}

fn directed_rms(from: &TriMesh, to: &TriangleBvh, params: &SamplingParams) -> f64 {
    let pts = sample_points(from, params);
    let sum: f64 = pts
        .iter()
        .map(|p| {
            let (_, _, d) = to.closest_point(p).expect("non-empty target");
            d * d
        })
        .sum();
    (sum / pts.len() as f64).sqrt()
}

pub fn hausdorff_rms(a: &TriMesh, b: &TriMesh, params: &SamplingParams) -> Result<HausdorffReport, MeshError> {
    if a.triangle_count() == 0 || b.triangle_count() == 0 {
        return Err(MeshError::NoTriangles);
    }
    if a == b {
        return Ok(HausdorffReport {
            a_to_b: 0.0,
            b_to_a: 0.0,
            symmetric: 0.0,
        });
    }
    let bvh_a = TriangleBvh::new(a);
    let bvh_b = TriangleBvh::new(b);
    let a_to_b = directed_rms(a, &bvh_b, params);
    let b_to_a = directed_rms(b, &bvh_a, params);
    Ok(HausdorffReport {
        a_to_b,
        b_to_a,
        symmetric: a_to_b.max(b_to_a),
    })
}

/// Distance from every vertex of `from` to the surface of `to` (heat values).
pub fn vertex_distances_to_surface(from: &TriMesh, to: &TriMesh) -> Result<Vec<f64>, MeshError> {
    if to.triangle_count() == 0 {
        return Err(MeshError::NoTriangles);
    }
    let bvh = TriangleBvh::new(to);
    Ok(from
        .positions()
        .iter()
        .map(|p| bvh.closest_point(p).map(|(_, _, d)| d).unwrap_or(f64::INFINITY))
        .collect())
}
