//! Incremental 3D convex hull with exact orientation predicates.
//!
//! The hull is the boundary of the Delaunay tetrahedralization of the input,
//! so it is computed directly rather than by extracting boundary faces from
//! tetrahedra. Points exactly on an existing face or edge are treated as
//! inside; output faces are canonicalized for determinism.

use std::collections::HashMap;

use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("need at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("points are coplanar (or collinear); no 3D hull exists")]
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hull {
    /// Outward-oriented triangles, each rotated so its smallest index comes
    /// first, sorted lexicographically.
    pub triangles: Vec<[usize; 3]>,
    /// Input indices that are hull vertices, ascending.
    pub vertices: Vec<usize>,
}

/// Positive when `p` lies on the side of `abc` its right-handed normal points to.
/// Exact sign.
#[inline]
pub fn orient(a: &Vec3, b: &Vec3, c: &Vec3, p: &Vec3) -> f64 {
    let c3 = |v: &Vec3| robust::Coord3D { x: v.x, y: v.y, z: v.z };
    -robust::orient3d(c3(a), c3(b), c3(c), c3(p))
}

pub fn canonical_triangle(t: [usize; 3]) -> [usize; 3] {
    let m = (0..3).min_by_key(|&k| t[k]).unwrap();
    [t[m], t[(m + 1) % 3], t[(m + 2) % 3]]
}

pub fn convex_hull(points: &[Vec3]) -> Result<Hull, HullError> {
    let n = points.len();
    if n < 4 {
        return Err(HullError::TooFewPoints(n));
    }
    // Initial simplex: extreme points for a well-shaped seed.
    let i0 = (0..n)
        .min_by(|&a, &b| {
            points[a]
                .iter()
                .zip(points[b].iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap();
    let i1 = (0..n)
        .max_by(|&a, &b| {
            (points[a] - points[i0])
                .norm_squared()
                .total_cmp(&(points[b] - points[i0]).norm_squared())
                .then(b.cmp(&a))
        })
        .unwrap();
    if (points[i1] - points[i0]).norm_squared() == 0.0 {
        return Err(HullError::Degenerate);
    }
    let dir = points[i1] - points[i0];
    let i2 = (0..n)
        .max_by(|&a, &b| {
            dir.cross(&(points[a] - points[i0]))
                .norm_squared()
                .total_cmp(&dir.cross(&(points[b] - points[i0])).norm_squared())
                .then(b.cmp(&a))
        })
        .unwrap();
    if dir.cross(&(points[i2] - points[i0])).norm_squared() == 0.0 {
        return Err(HullError::Degenerate);
    }
    let i3 = (0..n)
        .max_by(|&a, &b| {
            orient(&points[i0], &points[i1], &points[i2], &points[a])
                .abs()
                .total_cmp(&orient(&points[i0], &points[i1], &points[i2], &points[b]).abs())
                .then(b.cmp(&a))
        })
        .unwrap();
    let o = orient(&points[i0], &points[i1], &points[i2], &points[i3]);
    if o == 0.0 {
        return Err(HullError::Degenerate);
    }
    let mut faces: Vec<[usize; 3]> = if o < 0.0 {
        vec![[i0, i1, i2], [i0, i3, i1], [i1, i3, i2], [i2, i3, i0]]
    } else {
        vec![[i0, i2, i1], [i0, i1, i3], [i1, i2, i3], [i2, i0, i3]]
    };

    for p in 0..n {
        if p == i0 || p == i1 || p == i2 || p == i3 {
            continue;
        }
        let pt = &points[p];
        let visible: Vec<bool> = faces
            .iter()
            .map(|f| orient(&points[f[0]], &points[f[1]], &points[f[2]], pt) > 0.0)
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                edge_owner.insert((f[k], f[(k + 1) % 3]), fi);
            }
        }
        let mut new_faces = Vec::with_capacity(faces.len() + 4);
        let mut horizon = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            if !visible[fi] {
                new_faces.push(*f);
                continue;
            }
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let twin = edge_owner[&(b, a)];
                if !visible[twin] {
                    horizon.push((a, b));
                }
            }
        }
        for (a, b) in horizon {
            new_faces.push([a, b, p]);
        }
        faces = new_faces;
    }

    let mut triangles: Vec<[usize; 3]> = faces.into_iter().map(canonical_triangle).collect();
    triangles.sort_unstable();
    let mut vertices: Vec<usize> = triangles.iter().flatten().copied().collect();
    vertices.sort_unstable();
    vertices.dedup();
    Ok(Hull { triangles, vertices })
}
