//! Wavefront OBJ reading and writing ("v" and "f" records only).

use std::fmt::Write as _;

use super::{MeshError, TriMesh};
use crate::geometry::Vec3;

fn parse_index(token: &str, vertex_count: usize, line: usize) -> Result<usize, MeshError> {
    let head = token.split('/').next().unwrap_or("");
    let raw: i64 = head.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("bad face index {token:?}"),
    })?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        vertex_count as i64 + raw
    } else {
        -1
    };
    if idx < 0 || idx as usize >= vertex_count {
        return Err(MeshError::Parse {
            line,
            message: format!("face index {raw} out of range ({vertex_count} vertices)"),
        });
    }
    Ok(idx as usize)
}

/// Parse OBJ text. Polygons are fan-triangulated around their first corner.
/// Face indices are resolved against the vertices declared so far.
pub fn load_obj(bytes: &[u8]) -> Result<TriMesh, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::Parse {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Parse {
                        line,
                        message: format!("bad vertex coordinate: {e}"),
                    })?;
                if coords.len() < 3 || coords.len() > 4 {
                    return Err(MeshError::Parse {
                        line,
                        message: format!("vertex needs 3 coordinates, got {}", coords.len()),
                    });
                }
                positions.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = tokens
                    .map(|t| parse_index(t, positions.len(), line))
                    .collect::<Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(MeshError::Parse {
                        line,
                        message: "face needs at least 3 vertices".into(),
                    });
                }
                for k in 1..idx.len() - 1 {
                    let tri = [idx[0], idx[k], idx[k + 1]];
                    if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                        return Err(MeshError::Parse {
                            line,
                            message: "face repeats a vertex".into(),
                        });
                    }
                    triangles.push(tri);
                }
            }
            // texture coordinates, normals, groups, materials and the like are ignored
            _ => {}
        }
    }
    TriMesh::new(positions, triangles)
}

/// Serialize to OBJ text with 1-based indices.
pub fn save_obj(mesh: &TriMesh) -> Vec<u8> {
    let mut out = String::with_capacity(mesh.vertex_count() * 40 + mesh.triangle_count() * 24);
    for p in mesh.positions() {
        // `{:?}` on f64 prints the shortest round-tripping representation
        let _ = writeln!(out, "v {:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out.into_bytes()
}
