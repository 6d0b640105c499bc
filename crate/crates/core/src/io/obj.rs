use std::io::Write;

use super::{fan, fmt_f64, parse_float};
use crate::mesh::{MeshError, TriMesh};

/// Reads `v` and `f` records; indices are 1-based, negative indices count
/// back from the most recent vertex, and `v/vt/vn` corners keep only `v`.
pub fn parse_obj(bytes: &[u8]) -> Result<TriMesh, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::parse(0, e.to_string()))?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut polygon = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let t = tokens
                        .next()
                        .ok_or_else(|| MeshError::parse(line, "vertex needs three coordinates"))?;
                    *c = parse_float(t, line)?;
                }
                vertices.push(xyz);
            }
            Some("f") => {
                polygon.clear();
                for corner in tokens {
                    let index = corner.split('/').next().unwrap_or("");
                    let k: i64 = index
                        .parse()
                        .map_err(|_| MeshError::parse(line, format!("invalid index `{corner}`")))?;
                    let resolved = match k {
                        0 => None,
                        k if k > 0 => usize::try_from(k - 1).ok(),
                        k => (vertices.len() as i64)
                            .checked_add(k)
                            .and_then(|r| usize::try_from(r).ok()),
                    };
                    let v = resolved
                        .ok_or_else(|| MeshError::parse(line, format!("index `{corner}` out of range")))?;
                    polygon.push(v);
                }
                if polygon.len() < 3 {
                    return Err(MeshError::parse(line, "face needs at least three vertices"));
                }
                fan(&polygon, &mut faces);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn write_obj(mesh: &TriMesh, out: &mut impl Write) -> std::io::Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2]))?;
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TopologyError;

    #[test]
    fn quad_is_fan_split() {
        let src = b"# square\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\n";
        let m = parse_obj(src).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn negative_indices_are_relative() {
        let src = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        assert_eq!(parse_obj(src).unwrap().faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn malformed_records() {
        assert!(matches!(parse_obj(b"v 0 0\n"), Err(MeshError::Parse { line: 1, .. })));
        assert!(matches!(
            parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2\n"),
            Err(MeshError::Parse { line: 4, .. })
        ));
        assert!(matches!(
            parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n"),
            Err(MeshError::Parse { .. })
        ));
        assert!(matches!(parse_obj(b"v nan 0 0\n"), Err(MeshError::Parse { .. })));
        assert!(matches!(parse_obj(b"# nothing\n"), Err(MeshError::EmptyMesh)));
    }

    #[test]
    fn edge_in_three_faces_is_topology_error() {
        let src = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nf 1 2 3\nf 2 1 4\nf 1 2 5\n";
        assert!(matches!(
            parse_obj(src),
            Err(MeshError::Topology(TopologyError::NonManifoldEdge { .. }))
        ));
    }
}
