//! C-shaped flat pads and a literal brute-force border search, shared by the
//! filter tests and the acceptance suite.
#![allow(dead_code)]

use fatpad_core::attenuation::{AttenuationError, AttenuationParams, HandleAttenuation};
use fatpad_core::fatpad::{FatPadMap, HandleSpec, MapFile, MapFingerprint, PadSpec, Region};
use fatpad_core::geodesic::GeodesicCache;
use fatpad_core::geometry::{vec3, Vec3};
use fatpad_core::mesh::TriMesh;
use fatpad_core::shapes::grid;

pub struct CShape {
    pub inner: f64,
    pub outer: f64,
    pub gap_deg: f64,
    pub handle_deg: f64,
}

/// 41x41 grid over [-2, 2]^2 (1681 vertices) and a C-shaped pad opening towards +x.
pub fn setup(c: &CShape) -> Option<(TriMesh, FatPadMap)> {
    let g = grid(40, 40, 0.1);
    let m = g
        .with_positions(g.positions().iter().map(|p| p - vec3(2.0, 2.0, 0.0)).collect())
        .unwrap();
    let in_c = |p: &Vec3| {
        let r = (p.x * p.x + p.y * p.y).sqrt();
        let th = p.y.atan2(p.x).to_degrees().abs();
        r >= c.inner && r <= c.outer && th >= c.gap_deg
    };
    let vertices: Vec<usize> = (0..m.vertex_count()).filter(|&v| in_c(&m.position(v))).collect();
    let mid = 0.5 * (c.inner + c.outer);
    let target = vec3(mid * c.handle_deg.to_radians().cos(), mid * c.handle_deg.to_radians().sin(), 0.0);
    let anchor = *vertices
        .iter()
        .min_by(|&&a, &&b| (m.position(a) - target).norm().total_cmp(&(m.position(b) - target).norm()))?;
    let file = MapFile {
        fingerprint: MapFingerprint::of(&m),
        pads: vec![PadSpec {
            id: "c".into(),
            region: Region::Upper,
            vertices,
            movable_border: vec![],
            handles: vec![HandleSpec {
                id: "h".into(),
                anchor,
                axis_mask: None,
            }],
        }],
    };
    let map = FatPadMap::from_file(file, &m).ok()?;
    Some((m, map))
}

/// All rules applied literally: every border edge, 3D angle test,
/// strict between-ness on straight-line distances (the mesh is flat and
/// convex), nearest survivor. Returns the distance from v to the chosen point.
pub fn brute_force(m: &TriMesh, map: &FatPadMap, v: usize) -> Option<f64> {
    let pad = &map.pads[0];
    let h = map.handles[0].rest_position;
    let pv = m.position(v);
    let n = vec3(0.0, 0.0, 1.0);
    let plane = (pv - h).cross(&n).normalize();
    let full = |t: &[usize; 3]| t.iter().all(|&x| pad.contains(x));
    let mut best: Option<f64> = None;
    for (e, &[a, b]) in m.topology().edges().iter().enumerate() {
        let inside = m.topology().edge_faces(e).iter().filter(|&&f| full(&m.triangles()[f])).count();
        if inside != 1 {
            continue;
        }
        let (pa, pb) = (m.position(a), m.position(b));
        let (sa, sb) = (plane.dot(&(pa - h)), plane.dot(&(pb - h)));
        let mut pts = Vec::new();
        if sa == 0.0 {
            pts.push(pa);
        }
        if sb == 0.0 {
            pts.push(pb);
        }
        if sa != 0.0 && sb != 0.0 && (sa < 0.0) != (sb < 0.0) {
            pts.push(pa + (pb - pa) * (sa / (sa - sb)));
        }
        for i in pts {
            let cos = (i - h).normalize().dot(&(pv - h).normalize());
            if cos <= 1.0 - 1e-4 {
                continue;
            }
            if !((pv - h).norm() < (i - h).norm()) {
                continue;
            }
            let d = (pv - i).norm();
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        }
    }
    best
}

pub struct Outcome {
    pub checked: usize,
    pub pruned_by_between: usize,
}

pub fn compare(c: &CShape) -> Option<Outcome> {
    let (m, map) = setup(c)?;
    let ctx = match HandleAttenuation::new(&m, &map, "h", AttenuationParams::default(), &GeodesicCache::in_memory()) {
        Ok(ctx) => ctx,
        Err(AttenuationError::Map(_)) => return None,
        Err(e) => panic!("{e}"),
    };
    let pad = &map.pads[0];
    let anchor = map.handles[0].anchor;
    let mut out = Outcome {
        checked: 0,
        pruned_by_between: 0,
    };
    for &v in &pad.vertices {
        if v == anchor || pad.is_border(v) {
            continue;
        }
        let expected = brute_force(&m, &map, v);
        match (ctx.border_intersection(v), expected) {
            (Ok(hit), Some(d)) => {
                let got = (hit.position - m.position(v)).norm();
                assert!((got - d).abs() < 1e-9, "v {v}: selected at {got}, brute force {d}");
                // count rays that cross the border before reaching v
                let h = map.handles[0].rest_position;
                let pv = m.position(v);
                let nearer = ctx
                    .plane_candidates(v, &vec3(0.0, 0.0, 1.0))
                    .iter()
                    .any(|c| (c.position - h).dot(&(pv - h)) > 0.0 && (c.position - h).norm() < (pv - h).norm());
                out.pruned_by_between += usize::from(nearer);
            }
            (Err(AttenuationError::NoIntersection { .. }), None) => {}
            (got, want) => panic!("v {v}: implementation {got:?}, brute force {want:?}"),
        }
        out.checked += 1;
    }
    Some(out)
}
