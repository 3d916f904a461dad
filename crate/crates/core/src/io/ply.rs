//! PLY meshes: ascii and binary little-endian, triangles only.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;
use crate::linalg::Vec3;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
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
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            other => return Err(Error::parse(format!("unknown PLY type {other:?}"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Self::F32 | Self::F64)
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Self::Scalar { name, .. } | Self::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    body_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut next_line = || -> Result<&str> {
        let rest = &bytes[pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse("PLY header is not terminated by end_header"))?;
        pos += end + 1;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| Error::parse("PLY header is not valid UTF-8"))?;
        Ok(line.trim_end_matches('\r'))
    };
    if next_line()?.trim() != "ply" {
        return Err(Error::parse("missing 'ply' magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line()?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            None | Some("comment") | Some("obj_info") => {}
            Some("end_header") => break,
            Some("format") => {
                format = Some(match (tok.next(), tok.next()) {
                    (Some("ascii"), Some("1.0")) => PlyFormat::Ascii,
                    (Some("binary_little_endian"), Some("1.0")) => PlyFormat::BinaryLittleEndian,
                    (Some("binary_big_endian"), _) => {
                        return Err(Error::UnsupportedFormat("binary_big_endian PLY".into()))
                    }
                    _ => return Err(Error::parse(format!("bad format line {line:?}"))),
                });
            }
            Some("element") => {
                let (Some(name), Some(count), None) = (tok.next(), tok.next(), tok.next()) else {
                    return Err(Error::parse(format!("bad element line {line:?}")));
                };
                let count = count
                    .parse()
                    .map_err(|_| Error::parse(format!("bad element count in {line:?}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse("property before any element"))?;
                let words: Vec<&str> = tok.collect();
                let property = match words.as_slice() {
                    ["list", count, item, name] => {
                        let count = Scalar::parse(count)?;
                        if !count.is_integer() {
                            return Err(Error::parse("list count must be an integer type"));
                        }
                        Property::List {
                            name: name.to_string(),
                            count,
                            item: Scalar::parse(item)?,
                        }
                    }
                    [ty, name] => Property::Scalar {
                        name: name.to_string(),
                        ty: Scalar::parse(ty)?,
                    },
                    _ => return Err(Error::parse(format!("bad property line {line:?}"))),
                };
                element.properties.push(property);
            }
            Some(other) => return Err(Error::parse(format!("unexpected header keyword {other:?}"))),
        }
    }
    let format = format.ok_or_else(|| Error::parse("PLY header has no format line"))?;
    Ok(Header {
        format,
        elements,
        body_start: pos,
    })
}

/// Sequential reader over the body.
trait Body {
    fn value(&mut self, ty: Scalar) -> Result<f64>;
    fn remaining_hint(&self) -> usize;
}

struct AsciiBody<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
    len: usize,
}

impl Body for AsciiBody<'_> {
    fn value(&mut self, ty: Scalar) -> Result<f64> {
        let tok = self
            .tokens
            .next()
            .ok_or_else(|| Error::parse("PLY body ended early"))?;
        let v = if ty.is_integer() {
            tok.parse::<i64>().ok().map(|v| v as f64)
        } else {
            tok.parse::<f64>().ok()
        };
        v.ok_or_else(|| Error::parse(format!("bad {ty:?} value {tok:?}")))
    }

    fn remaining_hint(&self) -> usize {
        self.len
    }
}

struct BinaryBody<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Body for BinaryBody<'_> {
    fn value(&mut self, ty: Scalar) -> Result<f64> {
        let n = ty.size();
        let b = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::parse("PLY body is truncated"))?;
        self.pos += n;
        Ok(match ty {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b.try_into().expect("4 bytes")) as f64,
            Scalar::U32 => u32::from_le_bytes(b.try_into().expect("4 bytes")) as f64,
            Scalar::F32 => f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64,
            Scalar::F64 => f64::from_le_bytes(b.try_into().expect("8 bytes")),
        })
    }

    fn remaining_hint(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

fn index_value(v: f64) -> Result<usize> {
    if v < 0.0 || v.fract() != 0.0 || v > usize::MAX as f64 {
        return Err(Error::parse(format!("invalid vertex index {v}")));
    }
    Ok(v as usize)
}

fn read_body<T: Real>(header: &Header, body: &mut dyn Body) -> Result<TriangleMesh<T>> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut seen_vertex = false;
    for el in &header.elements {
        // each record takes at least one byte/token; never reserve beyond that
        let reserve = el.count.min(body.remaining_hint());
        match el.name.as_str() {
            "vertex" => {
                seen_vertex = true;
                let slot = |axis: &str| {
                    el.properties
                        .iter()
                        .position(|p| matches!(p, Property::Scalar { name, .. } if name == axis))
                        .ok_or_else(|| Error::parse(format!("vertex element has no {axis}")))
                };
                let (ix, iy, iz) = (slot("x")?, slot("y")?, slot("z")?);
                vertices.reserve(reserve);
                let mut rec = vec![0.0; el.properties.len()];
                for _ in 0..el.count {
                    for (k, p) in el.properties.iter().enumerate() {
                        rec[k] = read_property(p, body)?;
                    }
                    let v = [rec[ix], rec[iy], rec[iz]];
                    if v.iter().any(|c| !c.is_finite()) {
                        return Err(Error::parse(format!("non-finite vertex {}", vertices.len())));
                    }
                    vertices.push(Vec3::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2])));
                }
            }
            "face" => {
                let list = el
                    .properties
                    .iter()
                    .position(|p| {
                        matches!(p, Property::List { .. })
                            && matches!(p.name(), "vertex_indices" | "vertex_index")
                    })
                    .ok_or_else(|| Error::parse("face element has no vertex_indices list"))?;
                faces.reserve(reserve);
                for f in 0..el.count {
                    for (k, p) in el.properties.iter().enumerate() {
                        match p {
                            Property::List { count, item, .. } if k == list => {
                                let len = index_value(body.value(*count)?)?;
                                if len != 3 {
                                    return Err(Error::NonTriangleFace { face: f, len });
                                }
                                let mut tri = [0; 3];
                                for t in &mut tri {
                                    *t = index_value(body.value(*item)?)?;
                                }
                                faces.push(tri);
                            }
                            _ => {
                                read_property(p, body)?;
                            }
                        }
                    }
                }
            }
            _ => {
                for _ in 0..el.count {
                    for p in &el.properties {
                        read_property(p, body)?;
                    }
                }
            }
        }
    }
    if !seen_vertex {
        return Err(Error::parse("PLY has no vertex element"));
    }
    TriangleMesh::new(vertices, faces)
}

/// Reads one property; lists are consumed and their length returned.
fn read_property(p: &Property, body: &mut dyn Body) -> Result<f64> {
    match p {
        Property::Scalar { ty, .. } => body.value(*ty),
        Property::List { count, item, .. } => {
            let len = index_value(body.value(*count)?)?;
            for _ in 0..len {
                body.value(*item)?;
            }
            Ok(len as f64)
        }
    }
}

/// Parses a PLY file held in memory.
pub fn parse_ply<T: Real>(bytes: &[u8]) -> Result<TriangleMesh<T>> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_start..];
    match header.format {
        PlyFormat::Ascii => {
            let text = std::str::from_utf8(body).map_err(|_| Error::parse("ascii PLY body is not UTF-8"))?;
            read_body(
                &header,
                &mut AsciiBody {
                    tokens: text.split_ascii_whitespace(),
                    len: text.len(),
                },
            )
        }
        PlyFormat::BinaryLittleEndian => read_body(&header, &mut BinaryBody { bytes: body, pos: 0 }),
    }
}

pub fn load_ply<T: Real>(path: impl AsRef<Path>) -> Result<TriangleMesh<T>> {
    parse_ply(&std::fs::read(path)?)
}

/// Serializes vertices as `double` and faces as `uchar`/`uint` lists.
pub fn write_ply<T: Real>(mesh: &TriangleMesh<T>, format: PlyFormat, out: &mut impl Write) -> Result<()> {
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    write!(
        out,
        "ply\nformat {fmt} 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
         element face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.faces.len()
    )?;
    match format {
        PlyFormat::Ascii => {
            for v in &mesh.vertices {
                let [x, y, z] = v.to_array().map(|c| c.to_f64_lossy());
                writeln!(out, "{x:?} {y:?} {z:?}")?;
            }
            for f in &mesh.faces {
                writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
            }
        }
        PlyFormat::BinaryLittleEndian => {
            for v in &mesh.vertices {
                for c in v.to_array() {
                    out.write_all(&c.to_f64_lossy().to_le_bytes())?;
                }
            }
            for f in &mesh.faces {
                out.write_all(&[3])?;
                for &i in f {
                    let i = u32::try_from(i)
                        .map_err(|_| Error::InvalidMesh(format!("vertex index {i} exceeds u32")))?;
                    out.write_all(&i.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub fn save_ply<T: Real>(path: impl AsRef<Path>, mesh: &TriangleMesh<T>, format: PlyFormat) -> Result<()> {
    let mut buf = Vec::new();
    write_ply(mesh, format, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}
