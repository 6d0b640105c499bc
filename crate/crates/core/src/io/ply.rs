use std::io::Write;

use super::{fan, fmt_f64, vertex_normals};
use crate::mesh::{MeshError, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyEncoding {
    #[default]
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Storage {
    Ascii,
    Little,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }
}

#[derive(Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }

    fn min_size(&self) -> usize {
        match self {
            Property::Scalar { ty, .. } => ty.size(),
            Property::List { count, .. } => count.size(),
        }
    }
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    storage: Storage,
    elements: Vec<Element>,
    body_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, MeshError> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| MeshError::parse(0, "missing end_header"))?;
    let mut body_start = end + END.len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let text = std::str::from_utf8(&bytes[..end]).map_err(|e| MeshError::parse(0, e.to_string()))?;

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(MeshError::parse(1, "missing ply magic")),
    }
    let mut storage = None;
    let mut elements: Vec<Element> = Vec::new();
    for (line, l) in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        match t.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", kind, _version] => {
                storage = Some(match *kind {
                    "ascii" => Storage::Ascii,
                    "binary_little_endian" => Storage::Little,
                    "binary_big_endian" => Storage::Big,
                    other => return Err(MeshError::parse(line, format!("unknown format `{other}`"))),
                })
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| MeshError::parse(line, "invalid element count"))?,
                properties: Vec::new(),
            }),
            ["property", "list", count, item, name] => {
                let (count, item) = match (Scalar::parse(count), Scalar::parse(item)) {
                    (Some(c), Some(i)) => (c, i),
                    _ => return Err(MeshError::parse(line, "unknown list property type")),
                };
                elements
                    .last_mut()
                    .ok_or_else(|| MeshError::parse(line, "property before element"))?
                    .properties
                    .push(Property::List {
                        name: name.to_string(),
                        count,
                        item,
                    });
            }
            ["property", ty, name] => {
                let ty = Scalar::parse(ty)
                    .ok_or_else(|| MeshError::parse(line, format!("unknown property type `{ty}`")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| MeshError::parse(line, "property before element"))?
                    .properties
                    .push(Property::Scalar {
                        name: name.to_string(),
                        ty,
                    });
            }
            _ => return Err(MeshError::parse(line, format!("unrecognized header line `{l}`"))),
        }
    }
    let storage = storage.ok_or_else(|| MeshError::parse(0, "missing format line"))?;
    Ok(Header {
        storage,
        elements,
        body_start,
    })
}

trait Body {
    fn scalar(&mut self, ty: Scalar) -> Result<f64, MeshError>;
    fn remaining_bytes(&self) -> usize;
}

struct AsciiBody<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl Body for AsciiBody<'_> {
    fn scalar(&mut self, ty: Scalar) -> Result<f64, MeshError> {
        let tok = self
            .tokens
            .next()
            .ok_or_else(|| MeshError::parse(0, "unexpected end of PLY body"))?;
        let v: f64 = match ty {
            Scalar::F32 | Scalar::F64 => tok.parse().ok(),
            _ => tok.parse::<i64>().ok().map(|i| i as f64),
        }
        .ok_or_else(|| MeshError::parse(0, format!("invalid PLY value `{tok}`")))?;
        Ok(v)
    }

    fn remaining_bytes(&self) -> usize {
        usize::MAX
    }
}

struct BinaryBody<'a> {
    bytes: &'a [u8],
    pos: usize,
    big_endian: bool,
}

impl BinaryBody<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], MeshError> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| MeshError::parse(0, "unexpected end of PLY body"))?;
        self.pos = end;
        let mut out: [u8; N] = chunk.try_into().expect("length checked");
        if self.big_endian {
            out.reverse();
        }
        Ok(out)
    }
}

impl Body for BinaryBody<'_> {
    fn scalar(&mut self, ty: Scalar) -> Result<f64, MeshError> {
        Ok(match ty {
            Scalar::I8 => i8::from_le_bytes(self.take()?) as f64,
            Scalar::U8 => u8::from_le_bytes(self.take()?) as f64,
            Scalar::I16 => i16::from_le_bytes(self.take()?) as f64,
            Scalar::U16 => u16::from_le_bytes(self.take()?) as f64,
            Scalar::I32 => i32::from_le_bytes(self.take()?) as f64,
            Scalar::U32 => u32::from_le_bytes(self.take()?) as f64,
            Scalar::F32 => f32::from_le_bytes(self.take()?) as f64,
            Scalar::F64 => f64::from_le_bytes(self.take()?),
        })
    }

    fn remaining_bytes(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

fn to_index(v: f64) -> Result<usize, MeshError> {
    if v >= 0.0 && v.fract() == 0.0 && v < 9.0e15 {
        Ok(v as usize)
    } else {
        Err(MeshError::parse(0, format!("invalid vertex index {v}")))
    }
}

/// Reads vertex positions and face lists from a PLY file; every other
/// element and property is skipped.
pub fn parse_ply(bytes: &[u8]) -> Result<TriMesh, MeshError> {
    let header = parse_header(bytes)?;
    let data = &bytes[header.body_start..];
    let mut body: Box<dyn Body> = match header.storage {
        Storage::Ascii => Box::new(AsciiBody {
            tokens: std::str::from_utf8(data)
                .map_err(|e| MeshError::parse(0, e.to_string()))?
                .split_ascii_whitespace(),
        }),
        Storage::Little | Storage::Big => Box::new(BinaryBody {
            bytes: data,
            pos: 0,
            big_endian: header.storage == Storage::Big,
        }),
    };

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut polygon = Vec::new();
    let cap = bytes.len();
    for element in &header.elements {
        let row_size: usize = element.properties.iter().map(Property::min_size).sum();
        if element.count.saturating_mul(row_size) > body.remaining_bytes() {
            return Err(MeshError::parse(0, format!("element `{}` overruns the file", element.name)));
        }
        let position_slots: Option<[usize; 3]> = (element.name == "vertex")
            .then(|| {
                let find = |n: &str| element.properties.iter().position(|p| {
                    matches!(p, Property::Scalar { .. }) && p.name() == n
                });
                Some([find("x")?, find("y")?, find("z")?])
            })
            .flatten();
        if element.name == "vertex" && position_slots.is_none() {
            return Err(MeshError::parse(0, "vertex element lacks x, y, z"));
        }
        let index_list = (element.name == "face")
            .then(|| {
                element.properties.iter().position(|p| {
                    matches!(p, Property::List { .. })
                        && matches!(p.name(), "vertex_indices" | "vertex_index")
                })
            })
            .flatten();
        if element.name == "face" && index_list.is_none() {
            return Err(MeshError::parse(0, "face element lacks vertex_indices"));
        }
        if position_slots.is_some() {
            vertices.reserve(element.count.min(cap));
        }

        for _ in 0..element.count {
            let mut xyz = [0.0; 3];
            for (slot, prop) in element.properties.iter().enumerate() {
                match prop {
                    Property::Scalar { ty, .. } => {
                        let v = body.scalar(*ty)?;
                        if let Some(k) = position_slots.and_then(|s| s.iter().position(|&p| p == slot)) {
                            if !v.is_finite() {
                                return Err(MeshError::parse(0, "non-finite vertex coordinate"));
                            }
                            xyz[k] = v;
                        }
                    }
                    Property::List { count, item, .. } => {
                        let n = to_index(body.scalar(*count)?)?;
                        if n.saturating_mul(item.size()) > body.remaining_bytes() {
                            return Err(MeshError::parse(0, "list overruns the file"));
                        }
                        let keep = index_list == Some(slot);
                        if keep {
                            polygon.clear();
                        }
                        for _ in 0..n {
                            let v = body.scalar(*item)?;
                            if keep {
                                polygon.push(to_index(v)?);
                            }
                        }
                        if keep {
                            if polygon.len() < 3 {
                                return Err(MeshError::parse(0, "face needs at least three vertices"));
                            }
                            fan(&polygon, &mut faces);
                        }
                    }
                }
            }
            if position_slots.is_some() {
                vertices.push(xyz);
            }
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn write_ply(
    mesh: &TriMesh,
    out: &mut impl Write,
    encoding: PlyEncoding,
    with_normals: bool,
) -> std::io::Result<()> {
    let format = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(out, "ply")?;
    writeln!(out, "format {format} 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertex_count())?;
    for axis in ["x", "y", "z"] {
        writeln!(out, "property double {axis}")?;
    }
    if with_normals {
        for axis in ["nx", "ny", "nz"] {
            writeln!(out, "property double {axis}")?;
        }
    }
    writeln!(out, "element face {}", mesh.face_count())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "end_header")?;

    let normals = with_normals.then(|| vertex_normals(mesh));
    for (i, v) in mesh.vertices().iter().enumerate() {
        let mut row: Vec<f64> = v.to_vec();
        if let Some(n) = &normals {
            row.extend_from_slice(&n[i]);
        }
        match encoding {
            PlyEncoding::Ascii => {
                let cols: Vec<String> = row.into_iter().map(fmt_f64).collect();
                writeln!(out, "{}", cols.join(" "))?;
            }
            PlyEncoding::BinaryLittleEndian => {
                for x in row {
                    out.write_all(&x.to_le_bytes())?;
                }
            }
        }
    }
    for f in mesh.faces() {
        match encoding {
            PlyEncoding::Ascii => writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?,
            PlyEncoding::BinaryLittleEndian => {
                out.write_all(&[3u8])?;
                for &v in f {
                    let v = i32::try_from(v).map_err(std::io::Error::other)?;
                    out.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}
