use std::io::Write;

use super::{fan, fmt_f64, parse_float};
use crate::mesh::{MeshError, TriMesh};

/// Reads an `OFF` file. Trailing per-vertex or per-face values (colors) are
/// ignored.
pub fn parse_off(bytes: &[u8]) -> Result<TriMesh, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::parse(0, e.to_string()))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines.next().ok_or(MeshError::EmptyMesh)?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| MeshError::parse(line, "missing OFF header"))?;
    let (line, counts) = if rest.trim().is_empty() {
        lines
            .next()
            .ok_or_else(|| MeshError::parse(line, "missing element counts"))?
    } else {
        (line, rest.trim())
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .take(3)
        .map(|t| t.parse())
        .collect::<Result<_, _>>()
        .map_err(|_| MeshError::parse(line, "invalid element counts"))?;
    let (nv, nf) = match counts[..] {
        [nv, nf, ..] => (nv, nf),
        _ => return Err(MeshError::parse(line, "expected vertex and face counts")),
    };

    let cap = bytes.len() / 4;
    let mut vertices = Vec::with_capacity(nv.min(cap));
    for _ in 0..nv {
        let (line, l) = lines
            .next()
            .ok_or_else(|| MeshError::parse(line, "unexpected end of vertex list"))?;
        let mut t = l.split_whitespace();
        let mut xyz = [0.0; 3];
        for c in &mut xyz {
            let tok = t
                .next()
                .ok_or_else(|| MeshError::parse(line, "vertex needs three coordinates"))?;
            *c = parse_float(tok, line)?;
        }
        vertices.push(xyz);
    }

    let mut faces = Vec::with_capacity(nf.min(cap));
    let mut polygon = Vec::new();
    for _ in 0..nf {
        let (line, l) = lines
            .next()
            .ok_or_else(|| MeshError::parse(line, "unexpected end of face list"))?;
        let mut t = l.split_whitespace();
        let k: usize = t
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MeshError::parse(line, "invalid face size"))?;
        if k < 3 {
            return Err(MeshError::parse(line, "face needs at least three vertices"));
        }
        polygon.clear();
        for _ in 0..k {
            let v: usize = t
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| MeshError::parse(line, "invalid face index"))?;
            polygon.push(v);
        }
        fan(&polygon, &mut faces);
    }
    TriMesh::new(vertices, faces)
}

pub fn write_off(mesh: &TriMesh, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.face_count())?;
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2]))?;
    }
    for f in mesh.faces() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}
