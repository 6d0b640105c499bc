//! Mesh file formats: OBJ, OFF and PLY (ASCII, binary little- and
//! big-endian on read; ASCII and binary little-endian on write).
//!
//! Readers take untrusted bytes and never panic; every failure surfaces as a
//! [`MeshError`]. Polygonal faces are fan-triangulated and everything other
//! than positions and face lists is dropped. ASCII writers print 17
//! significant digits so that coordinates round-trip exactly.

mod obj;
mod off;
mod ply;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::geom::{self, Vec3};
use crate::mesh::{MeshError, TriMesh};

pub use obj::{parse_obj, write_obj};
pub use off::{parse_off, write_off};
pub use ply::{parse_ply, write_ply, PlyEncoding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshFormat {
    Obj,
    Off,
    Ply,
}

impl MeshFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        ext.parse().ok()
    }

    pub fn extension(self) -> &'static str {
        match self {
            MeshFormat::Obj => "obj",
            MeshFormat::Off => "off",
            MeshFormat::Ply => "ply",
        }
    }
}

impl std::str::FromStr for MeshFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "off" => Ok(MeshFormat::Off),
            "ply" => Ok(MeshFormat::Ply),
            other => Err(format!("unknown mesh format `{other}`")),
        }
    }
}

impl std::fmt::Display for MeshFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SaveOptions {
    pub ply_encoding: PlyEncoding,
    /// Adds per-vertex normals (PLY only).
    pub write_normals: bool,
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriMesh, MeshError> {
    let bytes = fs::read(path)?;
    parse_mesh(&bytes, format)
}

pub fn parse_mesh(bytes: &[u8], format: MeshFormat) -> Result<TriMesh, MeshError> {
    match format {
        MeshFormat::Obj => parse_obj(bytes),
        MeshFormat::Off => parse_off(bytes),
        MeshFormat::Ply => parse_ply(bytes),
    }
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<(), MeshError> {
    save_mesh_with(mesh, path, format, &SaveOptions::default())
}

pub fn save_mesh_with(
    mesh: &TriMesh,
    path: impl AsRef<Path>,
    format: MeshFormat,
    options: &SaveOptions,
) -> Result<(), MeshError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write_mesh(mesh, &mut out, format, options)?;
    out.flush()?;
    Ok(())
}

pub fn write_mesh(
    mesh: &TriMesh,
    out: &mut impl Write,
    format: MeshFormat,
    options: &SaveOptions,
) -> std::io::Result<()> {
    match format {
        MeshFormat::Obj => write_obj(mesh, out),
        MeshFormat::Off => write_off(mesh, out),
        MeshFormat::Ply => write_ply(mesh, out, options.ply_encoding, options.write_normals),
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Area-weighted vertex normals.
pub fn vertex_normals(mesh: &TriMesh) -> Vec<Vec3> {
    let p = mesh.vertices();
    let mut normals = vec![[0.0; 3]; p.len()];
    for &[a, b, c] in mesh.faces() {
        let n = geom::cross(geom::sub(p[b], p[a]), geom::sub(p[c], p[a]));
        for v in [a, b, c] {
            normals[v] = geom::add(normals[v], n);
        }
    }
    for n in &mut normals {
        let len = geom::norm(*n);
        if len > 0.0 {
            *n = geom::scale(*n, 1.0 / len);
        }
    }
    normals
}

/// Splits a polygon into a triangle fan around its first corner.
fn fan(polygon: &[usize], faces: &mut Vec<[usize; 3]>) {
    for k in 1..polygon.len().saturating_sub(1) {
        faces.push([polygon[0], polygon[k], polygon[k + 1]]);
    }
}

fn parse_float(token: &str, line: usize) -> Result<f64, MeshError> {
    let v: f64 = token
        .parse()
        .map_err(|_| MeshError::parse(line, format!("invalid number `{token}`")))?;
    if !v.is_finite() {
        return Err(MeshError::parse(line, format!("non-finite number `{token}`")));
    }
    Ok(v)
}
