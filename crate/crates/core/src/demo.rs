//! Procedural demo head (y up, +z towards the viewer) and its fat pad map.
//!
//! The head is a subdivided icosphere stretched into an ovoid with a nose,
//! brow ridge and chin. Pads are caps around feature directions; the lips
//! are split at the mouth line, which is movable border for both of them.

use crate::fatpad::{HandleSpec, MapFile, MapFingerprint, PadSpec, Region};
use crate::geometry::{vec3, Vec3};
use crate::mesh::TriMesh;
use crate::shapes::icosphere;

/// (id, region, direction, cap radius in radians, handle count, axis mask)
type PadDef = (&'static str, Region, [f64; 3], f64, usize, Option<[f64; 3]>);

const PADS: &[PadDef] = &[
    ("forehead", Region::Upper, [0.0, 0.62, 0.78], 0.30, 9, None),
    ("temple_l", Region::Upper, [0.78, 0.38, 0.50], 0.18, 3, None),
    ("temple_r", Region::Upper, [-0.78, 0.38, 0.50], 0.18, 3, None),
    ("brow_l", Region::Upper, [0.38, 0.36, 0.85], 0.17, 4, None),
    ("brow_r", Region::Upper, [-0.38, 0.36, 0.85], 0.17, 4, None),
    ("cheek_l", Region::Upper, [0.62, -0.08, 0.78], 0.24, 7, None),
    ("cheek_r", Region::Upper, [-0.62, -0.08, 0.78], 0.24, 7, None),
    ("nose", Region::Upper, [0.0, 0.05, 1.0], 0.16, 3, Some([0.0, 0.0, 1.0])),
    ("lip_upper", Region::Lower, [0.0, -0.30, 0.95], 0.12, 3, None),
    ("lip_lower", Region::Lower, [0.0, -0.52, 0.85], 0.12, 3, None),
    ("mouth_corner_l", Region::Lower, [0.30, -0.40, 0.87], 0.11, 1, None),
    ("mouth_corner_r", Region::Lower, [-0.30, -0.40, 0.87], 0.11, 1, None),
    ("chin", Region::Lower, [0.0, -0.80, 0.60], 0.18, 4, None),
    ("jaw_l", Region::Lower, [0.58, -0.55, 0.60], 0.18, 4, None),
    ("jaw_r", Region::Lower, [-0.58, -0.55, 0.60], 0.18, 4, None),
];

/// Height of the mouth line on the unit sphere, between the two lip caps.
const MOUTH_Y: f64 = -0.41;

fn bump(dir: &Vec3, centre: Vec3, width: f64) -> f64 {
    let a = dir.dot(&centre.normalize()).clamp(-1.0, 1.0).acos();
    (-(a / width).powi(2)).exp()
}

/// Head mesh: icosphere with `subdivisions` levels (5 gives 10242 vertices).
pub fn demo_head_mesh(subdivisions: usize) -> TriMesh {
    let s = icosphere(subdivisions, 1.0);
    let pos = s
        .positions()
        .iter()
        .map(|p| {
            let d = p.normalize();
            let r = 1.0 + 0.22 * bump(&d, vec3(0.0, 0.02, 1.0), 0.13) + 0.05 * bump(&d, vec3(0.0, 0.42, 0.9), 0.35)
                + 0.06 * bump(&d, vec3(0.0, -0.8, 0.6), 0.2);
            let q = d * r;
            vec3(0.78 * q.x, 1.05 * q.y, 0.92 * q.z)
        })
        .collect();
    s.with_positions(pos).expect("same topology")
}

/// The pad centre plus up to `count - 1` anchors on a ring at half the cap
/// radius, each snapped to the nearest unused interior pad vertex. Coarse
/// meshes get fewer handles.
fn handle_anchors(dirs: &[Vec3], vertices: &[usize], border: &[usize], c: &Vec3, radius: f64, count: usize) -> Vec<usize> {
    let t1 = c.cross(&vec3(0.0, 1.0, 0.0)).try_normalize(1e-9).unwrap_or(vec3(1.0, 0.0, 0.0));
    let t2 = c.cross(&t1);
    let interior = vertices.iter().filter(|v| border.binary_search(v).is_err()).count();
    let count = count.min(interior / 4).max(1);
    let mut used: Vec<usize> = Vec::with_capacity(count);
    for k in 0..count {
        let target = if k == 0 {
            *c
        } else {
            let th = std::f64::consts::TAU * (k - 1) as f64 / (count - 1) as f64;
            let a = 0.5 * radius;
            c * a.cos() + (t1 * th.cos() + t2 * th.sin()) * a.sin()
        };
        let best = vertices
            .iter()
            .copied()
            .filter(|v| border.binary_search(v).is_err() && !used.contains(v))
            .min_by(|&a, &b| (dirs[a] - target).norm().total_cmp(&(dirs[b] - target).norm()).then(a.cmp(&b)))
            .expect("pad has enough interior vertices");
        used.push(best);
    }
    used
}

/// Pad map of the demo head, computed on the unit sphere directions so it
/// only depends on the topology.
pub fn demo_head_map(mesh: &TriMesh, subdivisions: usize) -> MapFile {
    let dirs: Vec<Vec3> = icosphere(subdivisions, 1.0).positions().iter().map(|p| p.normalize()).collect();
    assert_eq!(dirs.len(), mesh.vertex_count(), "map and mesh must share a subdivision level");
    let angle = |v: usize, c: &Vec3| dirs[v].dot(c).clamp(-1.0, 1.0).acos();
    let pads = PADS
        .iter()
        .map(|&(id, region, c, radius, count, mask)| {
            let c = Vec3::from(c).normalize();
            let mut vertices: Vec<usize> = (0..dirs.len()).filter(|&v| angle(v, &c) <= radius).collect();
            // lips stop at the mouth line
            if id == "lip_upper" {
                vertices.retain(|&v| dirs[v].y >= MOUTH_Y);
            } else if id == "lip_lower" {
                vertices.retain(|&v| dirs[v].y < MOUTH_Y);
            }
            let border = crate::fatpad::compute_border(mesh, &vertices);
            // each lip's border along the other lip follows the mouth
            let movable_border = match id {
                "lip_upper" | "lip_lower" => {
                    let other = |v: usize| if id == "lip_upper" { dirs[v].y < MOUTH_Y } else { dirs[v].y >= MOUTH_Y };
                    let other_pad = PADS.iter().find(|p| p.0.starts_with("lip_") && p.0 != id).expect("both lips");
                    let oc = Vec3::from(other_pad.2).normalize();
                    border
                        .iter()
                        .copied()
                        .filter(|&v| mesh.topology().neighbors(v).iter().any(|&n| other(n) && angle(n, &oc) <= other_pad.3))
                        .collect()
                }
                _ => Vec::new(),
            };
            let handles = handle_anchors(&dirs, &vertices, &border, &c, radius, count);
            PadSpec {
                id: id.into(),
                region,
                vertices,
                movable_border,
                handles: handles
                    .into_iter()
                    .enumerate()
                    .map(|(k, anchor)| HandleSpec {
                        id: if k == 0 { id.to_string() } else { format!("{id}_{k}") },
                        anchor,
                        axis_mask: mask,
                    })
                    .collect(),
            }
        })
        .collect();
    MapFile {
        fingerprint: MapFingerprint::of(mesh),
        pads,
    }
}

/// Demo head at full resolution with its map.
pub fn demo_head() -> (TriMesh, MapFile) {
    let m = demo_head_mesh(5);
    let map = demo_head_map(&m, 5);
    (m, map)
}

/// Run the whole offline pipeline on the demo head at `subdivisions`.
pub fn demo_artifacts(subdivisions: usize) -> Result<crate::bundle::Artifacts, crate::bundle::BuildError> {
    let mesh = demo_head_mesh(subdivisions);
    let map = demo_head_map(&mesh, subdivisions);
    let json = serde_json::to_vec(&map).expect("map serializes");
    crate::bundle::build(mesh, &json, &Default::default(), &crate::geodesic::GeodesicCache::default())
}
