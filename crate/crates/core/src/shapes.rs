//! Procedural test and demo geometry.

use std::collections::HashMap;

use crate::cage::hull::{convex_hull, orient};
use crate::geometry::{vec3, Vec3};
use crate::mesh::TriMesh;

/// Subdivided icosahedron projected onto a sphere of `radius`.
pub fn icosphere(subdivisions: usize, radius: f64) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pos: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| vec3(x, y, z).normalize())
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, pos: &mut Vec<Vec3>| -> usize {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                pos.push(((pos[a] + pos[b]) * 0.5).normalize());
                pos.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let ab = mid(a, b, &mut pos);
            let bc = mid(b, c, &mut pos);
            let ca = mid(c, a, &mut pos);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let pos = pos.into_iter().map(|p| p * radius).collect();
    TriMesh::new(pos, tris).expect("icosphere is valid")
}

pub fn tetrahedron() -> TriMesh {
    let pos = vec![vec3(0., 0., 0.), vec3(1., 0., 0.), vec3(0., 1., 0.), vec3(0., 0., 1.)];
    TriMesh::new(pos, vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]).expect("valid")
}

/// Axis-aligned cube `[-h, h]^3`, 12 outward-oriented triangles.
pub fn cube(half: f64) -> TriMesh {
    let mut pos = Vec::new();
    for k in 0..8 {
        let s = |bit: usize| if k & bit != 0 { half } else { -half };
        pos.push(vec3(s(1), s(2), s(4)));
    }
    let quads = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let mut tris = Vec::new();
    for q in quads {
        tris.push([q[0], q[1], q[2]]);
        tris.push([q[0], q[2], q[3]]);
    }
    TriMesh::new(pos, tris).expect("valid")
}

/// Closed sphere triangulated as the hull of `n` Fibonacci-lattice points.
pub fn fibonacci_sphere(n: usize, radius: f64) -> TriMesh {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let pts: Vec<Vec3> = (0..n)
        .map(|k| {
            let y = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let th = golden * k as f64;
            vec3(r * th.cos(), y, r * th.sin()) * radius
        })
        .collect();
    let hull = convex_hull(&pts).expect("sphere points are in general position");
    TriMesh::new(pts, hull.triangles).expect("valid")
}

/// Delaunay triangulation of planar points (z = 0), counter-clockwise seen from +z.
pub fn delaunay_2d(points: &[(f64, f64)]) -> Vec<[usize; 3]> {
    let lifted: Vec<Vec3> = points.iter().map(|&(x, y)| vec3(x, y, x * x + y * y)).collect();
    let hull = convex_hull(&lifted).expect("non-degenerate planar point set");
    let down = vec3(0.0, 0.0, -1.0);
    hull.triangles
        .into_iter()
        .filter(|t| {
            // lower hull faces: a far-below point sits on their outer side
            let far = lifted[t[0]] + down * 1e6;
            orient(&lifted[t[0]], &lifted[t[1]], &lifted[t[2]], &far) > 0.0
        })
        .map(|t| [t[0], t[2], t[1]])
        .collect()
}

/// Flat disc mesh in the z = 0 plane, made of a centre vertex, Vogel spiral
/// points (all at distinct radii) inside `pad_radius`, a ring of
/// `rim_count` vertices exactly on `pad_radius`, and outer rings out to
/// `outer_radius`. Returns the mesh and the number of vertices with
/// radius <= `pad_radius` (they come first).
pub fn spiral_disc(interior: usize, rim_count: usize, pad_radius: f64, outer_radius: f64) -> (TriMesh, usize) {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let spacing = 2.0 * std::f64::consts::PI * pad_radius / rim_count as f64;
    // keep the spiral clear of the rim so no edge jumps across it
    let inner = pad_radius - 0.6 * spacing;
    let mut pts = vec![(0.0, 0.0)];
    for k in 0..interior {
        let r = inner * ((k as f64 + 1.0) / interior as f64).sqrt();
        let th = golden * (k as f64 + 1.0);
        pts.push((r * th.cos(), r * th.sin()));
    }
    for k in 0..rim_count {
        let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / rim_count as f64;
        pts.push((pad_radius * th.cos(), pad_radius * th.sin()));
    }
    let inside = pts.len();
    let rings = ((outer_radius - pad_radius) / spacing).ceil().max(1.0) as usize;
    for ring in 1..=rings {
        let r = pad_radius + (outer_radius - pad_radius) * ring as f64 / rings as f64;
        let count = (2.0 * std::f64::consts::PI * r / spacing).round() as usize;
        let phase = 0.37 * ring as f64;
        for k in 0..count {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + phase) / count as f64;
            pts.push((r * th.cos(), r * th.sin()));
        }
    }
    let tris = delaunay_2d(&pts);
    let pos = pts.iter().map(|&(x, y)| vec3(x, y, 0.0)).collect();
    (TriMesh::new(pos, tris).expect("valid disc"), inside)
}

/// Flat polar disc in z = 0: a centre vertex (index 0) and `rings` rings of
/// `spokes` vertices, ring `k` at radius `k * radius / rings`, every ring
/// aligned on the same spokes. Vertex `1 + (k - 1) * spokes + s` is ring `k`,
/// spoke `s`.
pub fn polar_disc(rings: usize, spokes: usize, radius: f64) -> TriMesh {
    let mut pos = vec![vec3(0.0, 0.0, 0.0)];
    for k in 1..=rings {
        let r = radius * k as f64 / rings as f64;
        for s in 0..spokes {
            let th = 2.0 * std::f64::consts::PI * s as f64 / spokes as f64;
            pos.push(vec3(r * th.cos(), r * th.sin(), 0.0));
        }
    }
    let id = |k: usize, s: usize| 1 + (k - 1) * spokes + s % spokes;
    let mut tris = Vec::new();
    for s in 0..spokes {
        tris.push([0, id(1, s), id(1, s + 1)]);
    }
    for k in 1..rings {
        for s in 0..spokes {
            tris.push([id(k, s), id(k + 1, s), id(k + 1, s + 1)]);
            tris.push([id(k, s), id(k + 1, s + 1), id(k, s + 1)]);
        }
    }
    TriMesh::new(pos, tris).expect("valid polar disc")
}

/// Regular planar grid of `nx` x `ny` cells in z = 0.
pub fn grid(nx: usize, ny: usize, spacing: f64) -> TriMesh {
    let mut pos = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            pos.push(vec3(i as f64 * spacing, j as f64 * spacing, 0.0));
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            tris.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            tris.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh::new(pos, tris).expect("valid grid")
}
