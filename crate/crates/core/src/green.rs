//! Green Coordinates for closed triangle cages (Lipman, Levin, Cohen-Or 2008).
//!
//! For a point `η` inside an outward-oriented cage, `φ_i(η)` weighs cage
//! vertices and `ψ_j(η)` weighs face normals so that
//! `η = Σ φ_i c_i + Σ ψ_j n_j`. A deformed cage maps `η` to
//! `Σ φ_i c'_i + Σ ψ_j s_j n'_j` where `s_j` is the stretch of face `j`.
//! Points outside the cage are left unbound.

use std::f64::consts::PI;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{triangle_cross, Vec3};
use crate::mesh::{TriMesh, VertexId};

#[derive(Debug, Error, PartialEq)]
pub enum GreenError {
    #[error("cage is not closed: edge ({0}, {1}) has {2} incident faces")]
    OpenCage(usize, usize, usize),
    #[error("mesh vertex {0} lies on cage face {1}")]
    OnBoundary(VertexId, usize),
    #[error("deformed cage has {found} vertices, binding expects {expected}")]
    TopologyMismatch { expected: usize, found: usize },
    #[error("binding file: {0}")]
    Cache(String),
}

/// Rest data of one cage face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestFace {
    pub u: Vec3,
    pub v: Vec3,
    pub normal: Vec3,
    pub area: f64,
}

/// Coordinates of the mesh vertices that lie inside a cage.
///
/// `phi` and `psi` are column-major: the coordinate of bound vertex `k`
/// with respect to cage vertex `i` is `phi[i * bound.len() + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcBinding {
    pub bound: Vec<VertexId>,
    pub rest_positions: Vec<Vec3>,
    pub rest_cage: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub rest_faces: Vec<RestFace>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub mesh_hash: String,
    pub cage_hash: String,
}

/// Per-face results of a deformed-cage evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFrame {
    /// `s_j n'_j`.
    pub scaled_normal: Vec3,
    pub degenerate: bool,
}

pub fn cage_hash(vertices: &[Vec3], triangles: &[[usize; 3]]) -> String {
    let mut h = Sha256::new();
    h.update((vertices.len() as u64).to_le_bytes());
    for p in vertices {
        for c in p.iter() {
            h.update(c.to_bits().to_le_bytes());
        }
    }
    for t in triangles {
        for &i in t {
            h.update((i as u64).to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

fn check_closed(triangles: &[[usize; 3]]) -> Result<(), GreenError> {
    let mut count: std::collections::BTreeMap<(usize, usize), usize> = Default::default();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    match count.into_iter().find(|&(_, c)| c != 2) {
        Some(((a, b), c)) => Err(GreenError::OpenCage(a, b, c)),
        None => Ok(()),
    }
}

pub fn rest_faces(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Vec<RestFace> {
    triangles
        .iter()
        .map(|t| {
            let u = vertices[t[1]] - vertices[t[0]];
            let v = vertices[t[2]] - vertices[t[0]];
            let c = u.cross(&v);
            RestFace {
                u,
                v,
                normal: c.normalize(),
                area: 0.5 * c.norm(),
            }
        })
        .collect()
}

/// Signed solid angle of triangle `(a, b, c)` seen from the origin.
fn solid_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(c));
    let den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    2.0 * num.atan2(den)
}

/// `∫ 1/|x|` along the segment `a -> b`.
fn edge_log(a: &Vec3, b: &Vec3) -> f64 {
    let (ra, rb) = (a.norm(), b.norm());
    let l = (b - a).norm();
    let s = ra + rb;
    // (s - l) written without cancellation
    let lo = (s * s - l * l).max(0.0) / (s + l);
    ((s + l) / lo).ln()
}

/// Green Coordinates of point `eta`: `(φ per cage vertex, ψ per cage face)`.
/// `Err(j)` when `eta` lies within `eps` of face `j`.
///
/// Per face, with `η` at the origin, `Ω` the signed solid angle, `d` the
/// plane offset, and for each edge `L_e = ∫ 1/r`, `m_e` its outward in-plane
/// normal and `h_e` the in-plane distance to its line:
/// `ψ = (Σ h_e L_e - |d||Ω|) / 4π` and
/// `φ_l = q_l · (Ω n - Σ m_e L_e) / 8πA` with `q_l = v_{l+1} × v_{l+2}`.
pub fn coordinates(eta: &Vec3, vertices: &[Vec3], triangles: &[[usize; 3]], faces: &[RestFace], eps: f64) -> Result<(Vec<f64>, Vec<f64>), usize> {
    let mut phi = vec![0.0; vertices.len()];
    let mut psi = vec![0.0; triangles.len()];
    for (j, t) in triangles.iter().enumerate() {
        let f = &faces[j];
        let n = f.normal;
        let v = [vertices[t[0]] - eta, vertices[t[1]] - eta, vertices[t[2]] - eta];
        let d = v[0].dot(&n);
        let closest = crate::geometry::closest_point_on_triangle(&Vec3::zeros(), &v[0], &v[1], &v[2]);
        if closest.norm() <= eps {
            return Err(j);
        }
        let omega = solid_angle(&v[0], &v[1], &v[2]);
        let mut tangential = Vec3::zeros();
        let mut lin = 0.0;
        for l in 0..3 {
            let (a, b) = (&v[l], &v[(l + 1) % 3]);
            let e = b - a;
            let m = e.cross(&n).normalize();
            let le = edge_log(a, b);
            tangential += m * le;
            lin += m.dot(a) * le;
        }
        psi[j] = (lin - d.abs() * omega.abs()) / (4.0 * PI);
        let big_v = n * omega - tangential;
        for l in 0..3 {
            let q = v[(l + 1) % 3].cross(&v[(l + 2) % 3]);
            phi[t[l]] += q.dot(&big_v) / (8.0 * PI * f.area);
        }
    }
    Ok((phi, psi))
}

/// Generalized winding number of a closed triangle surface around `p`.
pub fn winding_number(p: &Vec3, vertices: &[Vec3], triangles: &[[usize; 3]]) -> f64 {
    let mut total = 0.0;
    for t in triangles {
        total += solid_angle(&(vertices[t[0]] - p), &(vertices[t[1]] - p), &(vertices[t[2]] - p));
    }
    total / (4.0 * PI)
}

/// Stretch factor of a deformed triangle relative to its rest shape.
pub fn stretch(rest: &RestFace, u: &Vec3, v: &Vec3) -> f64 {
    let val = u.norm_squared() * rest.v.norm_squared() - 2.0 * u.dot(v) * rest.u.dot(&rest.v)
        + v.norm_squared() * rest.u.norm_squared();
    val.max(0.0).sqrt() / (8f64.sqrt() * rest.area)
}

/// Bind every mesh vertex inside the cage.
pub fn bind(mesh: &TriMesh, cage_vertices: &[Vec3], cage_triangles: &[[usize; 3]]) -> Result<GcBinding, GreenError> {
    check_closed(cage_triangles)?;
    let faces = rest_faces(cage_vertices, cage_triangles);
    let scale = mesh.bbox_diagonal().max(crate::geometry::Aabb::from_points(cage_vertices.iter()).diagonal());
    let eps = 1e-12 * scale;
    let nudge = 1e-8 * scale;
    let rows: Vec<Result<Option<(VertexId, Vec<f64>, Vec<f64>)>, GreenError>> = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| {
            let eta = mesh.position(v);
            if winding_number(&eta, cage_vertices, cage_triangles) < 0.5 {
                return Ok(None);
            }
            // near a face plane the closed form loses precision: integrate at a nudged point
            let mut at = eta;
            for (j, t) in cage_triangles.iter().enumerate() {
                let d = (cage_vertices[t[0]] - at).dot(&faces[j].normal);
                if d.abs() < nudge && d.abs() > eps {
                    let inside = (0..3).all(|l| {
                        let a = cage_vertices[t[l]] - at;
                        let b = cage_vertices[t[(l + 1) % 3]] - at;
                        a.cross(&b).dot(&faces[j].normal) >= -eps * eps
                    });
                    if inside {
                        log::debug!("vertex {v} within {d:e} of cage face {j}; nudged inward");
                        at -= faces[j].normal * nudge;
                    }
                }
            }
            match coordinates(&at, cage_vertices, cage_triangles, &faces, eps) {
                Ok((phi, psi)) => Ok(Some((v, phi, psi))),
                Err(j) => Err(GreenError::OnBoundary(v, j)),
            }
        })
        .collect();
    let mut bound = Vec::new();
    let mut phi_rows = Vec::new();
    let mut psi_rows = Vec::new();
    for r in rows {
        if let Some((v, phi, psi)) = r? {
            bound.push(v);
            phi_rows.push(phi);
            psi_rows.push(psi);
        }
    }
    let nb = bound.len();
    let mut phi = vec![0.0; cage_vertices.len() * nb];
    let mut psi = vec![0.0; cage_triangles.len() * nb];
    for k in 0..nb {
        for (i, &x) in phi_rows[k].iter().enumerate() {
            phi[i * nb + k] = x;
        }
        for (j, &x) in psi_rows[k].iter().enumerate() {
            psi[j * nb + k] = x;
        }
    }
    Ok(GcBinding {
        rest_positions: bound.iter().map(|&v| mesh.position(v)).collect(),
        bound,
        rest_cage: cage_vertices.to_vec(),
        triangles: cage_triangles.to_vec(),
        rest_faces: faces,
        phi,
        psi,
        mesh_hash: mesh.content_hash(),
        cage_hash: cage_hash(cage_vertices, cage_triangles),
    })
}

impl GcBinding {
    pub fn bound_count(&self) -> usize {
        self.bound.len()
    }

    #[inline]
    pub fn phi(&self, k: usize, i: usize) -> f64 {
        self.phi[i * self.bound.len() + k]
    }

    #[inline]
    pub fn psi(&self, k: usize, j: usize) -> f64 {
        self.psi[j * self.bound.len() + k]
    }

    fn check(&self, deformed: &[Vec3]) -> Result<(), GreenError> {
        if deformed.len() != self.rest_cage.len() {
            return Err(GreenError::TopologyMismatch {
                expected: self.rest_cage.len(),
                found: deformed.len(),
            });
        }
        Ok(())
    }

    /// `s_j n'_j` for face `j` of the deformed cage.
    pub fn face_frame(&self, deformed: &[Vec3], j: usize) -> FaceFrame {
        let t = self.triangles[j];
        let u = deformed[t[1]] - deformed[t[0]];
        let v = deformed[t[2]] - deformed[t[0]];
        let c = triangle_cross(&deformed[t[0]], &deformed[t[1]], &deformed[t[2]]);
        let rest = &self.rest_faces[j];
        let s = stretch(rest, &u, &v);
        if c.norm() <= 1e-14 * rest.area.max(f64::MIN_POSITIVE) {
            log::warn!("deformed cage face {j} is degenerate; keeping its rest normal");
            return FaceFrame {
                scaled_normal: rest.normal * s,
                degenerate: true,
            };
        }
        FaceFrame {
            scaled_normal: c.normalize() * s,
            degenerate: false,
        }
    }

    /// Full evaluation: positions of the bound vertices under the deformed cage.
    pub fn evaluate(&self, deformed: &[Vec3]) -> Result<Vec<Vec3>, GreenError> {
        self.check(deformed)?;
        let nb = self.bound.len();
        let frames: Vec<Vec3> = (0..self.triangles.len()).map(|j| self.face_frame(deformed, j).scaled_normal).collect();
        Ok((0..nb)
            .into_par_iter()
            .map(|k| {
                let mut p = Vec3::zeros();
                for (i, c) in deformed.iter().enumerate() {
                    p += c * self.phi[i * nb + k];
                }
                for (j, f) in frames.iter().enumerate() {
                    p += f * self.psi[j * nb + k];
                }
                p
            })
            .collect())
    }

    /// Same result as [`Self::evaluate`] written as rest position plus the
    /// contribution of cage changes, touching only vertices and faces that
    /// differ from the rest cage. An undeformed cage returns the rest
    /// positions bit for bit.
    pub fn evaluate_delta(&self, deformed: &[Vec3]) -> Result<Vec<Vec3>, GreenError> {
        self.check(deformed)?;
        let mut out = self.rest_positions.clone();
        self.accumulate_delta(deformed, &mut out);
        Ok(out)
    }

    /// Add the displacement caused by `deformed` to `out` (indexed like `bound`).
    pub fn accumulate_delta(&self, deformed: &[Vec3], out: &mut [Vec3]) {
        let delta = self.delta(&self.rest_cage, deformed);
        if delta.is_empty() {
            return;
        }
        out.par_iter_mut().enumerate().for_each(|(k, p)| *p += delta.at(k));
    }

    /// `s_j n'_j` of face `j`, or the exact rest normal when the face has not moved.
    fn frame_or_rest(&self, cage: &[Vec3], j: usize) -> Vec3 {
        if self.triangles[j].iter().all(|&i| cage[i] == self.rest_cage[i]) {
            self.rest_faces[j].normal
        } else {
            self.face_frame(cage, j).scaled_normal
        }
    }

    /// Displacement of the bound vertices when the cage goes from `from` to
    /// `to`. Only cage vertices and faces that differ contribute.
    pub fn delta<'a>(&'a self, from: &[Vec3], to: &[Vec3]) -> CageDelta<'a> {
        let nb = self.bound.len();
        let mut terms: Vec<(&'a [f64], Vec3)> = Vec::new();
        for i in (0..to.len()).filter(|&i| to[i] != from[i]) {
            terms.push((&self.phi[i * nb..(i + 1) * nb], to[i] - from[i]));
        }
        for (j, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&i| to[i] != from[i]) {
                let d = self.frame_or_rest(to, j) - self.frame_or_rest(from, j);
                terms.push((&self.psi[j * nb..(j + 1) * nb], d));
            }
        }
        CageDelta { terms }
    }
}

/// Columns and coefficients of a cage change; see [`GcBinding::delta`].
#[derive(Debug, Clone)]
pub struct CageDelta<'a> {
    terms: Vec<(&'a [f64], Vec3)>,
}

impl CageDelta<'_> {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Displacement of bound vertex `k`.
    #[inline]
    pub fn at(&self, k: usize) -> Vec3 {
        let mut acc = Vec3::zeros();
        for (col, d) in &self.terms {
            acc += d * col[k];
        }
        acc
    }
}

pub const BINDING_MAGIC: &[u8; 4] = b"FPGC";
const BINDING_VERSION: u32 = 1;

/// Binary binding file, little-endian:
///
/// ```text
/// 0    4    magic "FPGC"
/// 4    4    u32 version (1)
/// 8    64   mesh content hash, ASCII hex
/// 72   64   cage hash, ASCII hex
/// 136  8    u64 bound vertex count B
/// 144  8    u64 cage vertex count V
/// 152  8    u64 cage face count F
/// 160  8B   u64 bound mesh vertex ids
/// ..   24V  f64 rest cage positions (x, y, z)
/// ..   24F  u64 cage triangles
/// ..   8VB  f64 phi, column-major
/// ..   8FB  f64 psi, column-major
/// ```
pub fn encode_binding(b: &GcBinding) -> Vec<u8> {
    let (nb, nv, nf) = (b.bound.len(), b.rest_cage.len(), b.triangles.len());
    let mut out = Vec::with_capacity(160 + 8 * nb + 24 * nv + 24 * nf + 8 * (nv + nf) * nb);
    out.extend_from_slice(BINDING_MAGIC);
    out.extend_from_slice(&BINDING_VERSION.to_le_bytes());
    for h in [&b.mesh_hash, &b.cage_hash] {
        let mut buf = [b'0'; 64];
        let n = h.len().min(64);
        buf[..n].copy_from_slice(&h.as_bytes()[..n]);
        out.extend_from_slice(&buf);
    }
    for n in [nb, nv, nf] {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for &v in &b.bound {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for p in &b.rest_cage {
        for c in p.iter() {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for t in &b.triangles {
        for &i in t {
            out.extend_from_slice(&(i as u64).to_le_bytes());
        }
    }
    for x in b.phi.iter().chain(&b.psi) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Decode a binding and check it belongs to `mesh`.
pub fn decode_binding(bytes: &[u8], mesh: &TriMesh) -> Result<GcBinding, GreenError> {
    let bad = |m: &str| GreenError::Cache(m.to_string());
    if bytes.len() < 160 || &bytes[..4] != BINDING_MAGIC {
        return Err(bad("bad magic"));
    }
    if u32::from_le_bytes(bytes[4..8].try_into().unwrap()) != BINDING_VERSION {
        return Err(bad("unsupported version"));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let mesh_hash = String::from_utf8_lossy(&bytes[8..72]).into_owned();
    let cage_h = String::from_utf8_lossy(&bytes[72..136]).into_owned();
    if mesh_hash != mesh.content_hash() {
        return Err(bad("binding belongs to another mesh"));
    }
    let (nb, nv, nf) = (u64_at(136) as usize, u64_at(144) as usize, u64_at(152) as usize);
    let expected = 160usize
        .checked_add(8 * nb)
        .and_then(|x| x.checked_add(24 * nv + 24 * nf))
        .and_then(|x| x.checked_add(8 * (nv + nf) * nb));
    if expected != Some(bytes.len()) {
        return Err(bad("size mismatch"));
    }
    let mut o = 160;
    let mut bound = Vec::with_capacity(nb);
    for _ in 0..nb {
        let v = u64_at(o) as usize;
        if v >= mesh.vertex_count() {
            return Err(bad("bound vertex out of range"));
        }
        bound.push(v);
        o += 8;
    }
    let mut rest_cage = Vec::with_capacity(nv);
    for _ in 0..nv {
        rest_cage.push(Vec3::new(f64_at(o), f64_at(o + 8), f64_at(o + 16)));
        o += 24;
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let t = [u64_at(o) as usize, u64_at(o + 8) as usize, u64_at(o + 16) as usize];
        if t.iter().any(|&i| i >= nv) {
            return Err(bad("cage triangle out of range"));
        }
        triangles.push(t);
        o += 24;
    }
    let phi: Vec<f64> = (0..nv * nb).map(|i| f64_at(o + 8 * i)).collect();
    o += 8 * nv * nb;
    let psi: Vec<f64> = (0..nf * nb).map(|i| f64_at(o + 8 * i)).collect();
    if cage_hash(&rest_cage, &triangles) != cage_h {
        return Err(bad("cage hash mismatch"));
    }
    Ok(GcBinding {
        rest_positions: bound.iter().map(|&v| mesh.position(v)).collect(),
        bound,
        rest_faces: rest_faces(&rest_cage, &triangles),
        rest_cage,
        triangles,
        phi,
        psi,
        mesh_hash,
        cage_hash: cage_h,
    })
}
