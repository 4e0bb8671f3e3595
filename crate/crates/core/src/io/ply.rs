//! PLY point-cloud reader and writer (ASCII and binary little-endian).
//!
//! Only the `vertex` element is interpreted; every other element is skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{PointCloud, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

/// How colors are stored when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorEncoding {
    /// 8-bit channels in 0..=255, the common convention.
    #[default]
    Uchar,
    /// 32-bit float channels already in [0, 1].
    Float,
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

    fn is_integer(self) -> bool {
        !matches!(self, Scalar::F32 | Scalar::F64)
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    body_offset: usize,
    body_line: usize,
}

fn header_err(line: usize, message: impl Into<String>) -> Error {
    Error::Ply {
        location: format!("header line {line}"),
        message: message.into(),
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let rest = &bytes[offset..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(header_err(line_no + 1, "missing end_header"));
        };
        line_no += 1;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| header_err(line_no, "header is not valid ASCII"))?
            .trim_end_matches('\r')
            .trim();
        offset += nl + 1;
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or("");
        if line_no == 1 {
            if line != "ply" {
                return Err(header_err(1, "file does not start with 'ply'"));
            }
            continue;
        }
        match keyword {
            "format" => {
                encoding = Some(match tokens.next() {
                    Some("ascii") => PlyEncoding::Ascii,
                    Some("binary_little_endian") => PlyEncoding::BinaryLittleEndian,
                    Some(other) => return Err(header_err(line_no, format!("unsupported format '{other}'"))),
                    None => return Err(header_err(line_no, "format line without encoding")),
                });
            }
            "comment" | "obj_info" | "" => {}
            "element" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| header_err(line_no, "element without name"))?;
                let count = tokens
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| header_err(line_no, "element without valid count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| header_err(line_no, "property before any element"))?;
                let first = tokens
                    .next()
                    .ok_or_else(|| header_err(line_no, "property without type"))?;
                let prop = if first == "list" {
                    let count = tokens.next().and_then(Scalar::parse);
                    let item = tokens.next().and_then(Scalar::parse);
                    match (count, item, tokens.next()) {
                        (Some(count), Some(item), Some(_)) => Property::List { count, item },
                        _ => return Err(header_err(line_no, "malformed list property")),
                    }
                } else {
                    let ty =
                        Scalar::parse(first).ok_or_else(|| header_err(line_no, format!("unknown type '{first}'")))?;
                    let name = tokens
                        .next()
                        .ok_or_else(|| header_err(line_no, "property without name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                element.properties.push(prop);
            }
            "end_header" => break,
            other => return Err(header_err(line_no, format!("unexpected keyword '{other}'"))),
        }
    }
    let encoding = encoding.ok_or_else(|| header_err(line_no, "missing format line"))?;
    Ok(Header {
        encoding,
        elements,
        body_offset: offset,
        body_line: line_no + 1,
    })
}

/// Column slots of the vertex properties we care about.
#[derive(Default)]
struct VertexLayout {
    xyz: [Option<usize>; 3],
    rgb: [Option<usize>; 3],
    normal: [Option<usize>; 3],
    color_is_integer: bool,
}

impl VertexLayout {
    fn new(element: &Element) -> Result<Self> {
        let mut layout = VertexLayout::default();
        for (slot, prop) in element.properties.iter().enumerate() {
            let Property::Scalar { name, ty } = prop else {
                continue;
            };
            match name.as_str() {
                "x" => layout.xyz[0] = Some(slot),
                "y" => layout.xyz[1] = Some(slot),
                "z" => layout.xyz[2] = Some(slot),
                "red" | "diffuse_red" => {
                    layout.rgb[0] = Some(slot);
                    layout.color_is_integer = ty.is_integer();
                }
                "green" | "diffuse_green" => layout.rgb[1] = Some(slot),
                "blue" | "diffuse_blue" => layout.rgb[2] = Some(slot),
                "nx" => layout.normal[0] = Some(slot),
                "ny" => layout.normal[1] = Some(slot),
                "nz" => layout.normal[2] = Some(slot),
                _ => {}
            }
        }
        if layout.xyz.iter().any(Option::is_none) {
            return Err(Error::Ply {
                location: "header".into(),
                message: "vertex element lacks x, y or z".into(),
            });
        }
        Ok(layout)
    }

    fn has_colors(&self) -> bool {
        self.rgb.iter().all(Option::is_some)
    }

    fn has_normals(&self) -> bool {
        self.normal.iter().all(Option::is_some)
    }
}

struct VertexData {
    positions: Vec<Vec3>,
    colors: Vec<Vec3>,
    normals: Vec<Vec3>,
}

impl VertexData {
    fn with_capacity(n: usize) -> Self {
        Self {
            positions: Vec::with_capacity(n),
            colors: Vec::new(),
            normals: Vec::new(),
        }
    }

    fn push(&mut self, layout: &VertexLayout, values: &[f64], location: impl Fn() -> String) -> Result<()> {
        let pick = |slots: &[Option<usize>; 3]| {
            Vec3::new(
                values[slots[0].unwrap()],
                values[slots[1].unwrap()],
                values[slots[2].unwrap()],
            )
        };
        let p = pick(&layout.xyz);
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::Ply {
                location: location(),
                message: "non-finite coordinate".into(),
            });
        }
        self.positions.push(p);
        if layout.has_colors() {
            let c = pick(&layout.rgb);
            self.colors.push(if layout.color_is_integer { c / 255.0 } else { c });
        }
        if layout.has_normals() {
            self.normals.push(pick(&layout.normal));
        }
        Ok(())
    }
}

/// Reads a PLY file into a [`PointCloud`].
pub fn load_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes)
}

/// Parses PLY bytes already in memory.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::Ply {
            location: "header".into(),
            message: "no vertex element".into(),
        })?;
    let data = match header.encoding {
        PlyEncoding::Ascii => read_ascii(bytes, &header, vertex_pos)?,
        PlyEncoding::BinaryLittleEndian => read_binary(bytes, &header, vertex_pos)?,
    };
    let colors = (!data.colors.is_empty()).then_some(data.colors);
    let normals = if data.normals.is_empty() {
        None
    } else if data.normals.iter().any(|n| n.norm() == 0.0 || !n.norm().is_finite()) {
        log::warn!("ply contains zero-length normals; treating normals as absent");
        None
    } else {
        Some(data.normals.into_iter().map(|n| n.normalize()).collect())
    };
    PointCloud::new(data.positions, colors, normals)
}

fn read_ascii(bytes: &[u8], header: &Header, vertex_pos: usize) -> Result<VertexData> {
    let body = std::str::from_utf8(&bytes[header.body_offset..]).map_err(|e| Error::Ply {
        location: format!("byte {}", header.body_offset + e.valid_up_to()),
        message: "ascii body is not valid UTF-8".into(),
    })?;
    let mut lines = body
        .lines()
        .enumerate()
        .map(|(i, l)| (header.body_line + i, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let mut data = VertexData::with_capacity(0);
    for (ei, element) in header.elements.iter().enumerate().take(vertex_pos + 1) {
        let layout = (ei == vertex_pos).then(|| VertexLayout::new(element)).transpose()?;
        if layout.is_some() {
            data = VertexData::with_capacity(element.count);
        }
        for read in 0..element.count {
            let Some((line_no, line)) = lines.next() else {
                return Err(Error::Ply {
                    location: format!("line {}", header.body_line + read),
                    message: format!(
                        "truncated payload: element '{}' declares {} entries, found {read}",
                        element.name, element.count
                    ),
                });
            };
            let Some(layout) = &layout else { continue };
            let mut tokens = line.split_whitespace();
            let mut values = Vec::with_capacity(element.properties.len());
            for prop in &element.properties {
                let mut next = || -> Result<f64> {
                    let tok = tokens.next().ok_or_else(|| Error::Ply {
                        location: format!("line {line_no}"),
                        message: "truncated payload: too few values on line".into(),
                    })?;
                    tok.parse::<f64>().map_err(|_| Error::Ply {
                        location: format!("line {line_no}"),
                        message: format!("invalid number '{tok}'"),
                    })
                };
                match prop {
                    Property::Scalar { .. } => values.push(next()?),
                    Property::List { .. } => {
                        let n = next()? as usize;
                        for _ in 0..n {
                            next()?;
                        }
                        values.push(f64::NAN);
                    }
                }
            }
            data.push(layout, &values, || format!("line {line_no}"))?;
        }
    }
    Ok(data)
}

fn read_binary(bytes: &[u8], header: &Header, vertex_pos: usize) -> Result<VertexData> {
    let mut offset = header.body_offset;
    let take = |offset: &mut usize, n: usize, element: &Element, read: usize| -> Result<usize> {
        if *offset + n > bytes.len() {
            return Err(Error::Ply {
                location: format!("byte {}", *offset),
                message: format!(
                    "truncated payload: element '{}' declares {} entries, ran out of data at entry {read}",
                    element.name, element.count
                ),
            });
        }
        let start = *offset;
        *offset += n;
        Ok(start)
    };
    let mut data = VertexData::with_capacity(0);
    for (ei, element) in header.elements.iter().enumerate().take(vertex_pos + 1) {
        let layout = (ei == vertex_pos).then(|| VertexLayout::new(element)).transpose()?;
        if layout.is_some() {
            data = VertexData::with_capacity(element.count);
        }
        let mut values = Vec::with_capacity(element.properties.len());
        for read in 0..element.count {
            values.clear();
            let entry_offset = offset;
            for prop in &element.properties {
                match prop {
                    Property::Scalar { ty, .. } => {
                        let at = take(&mut offset, ty.size(), element, read)?;
                        values.push(ty.read_le(&bytes[at..]));
                    }
                    Property::List { count, item } => {
                        let at = take(&mut offset, count.size(), element, read)?;
                        let n = count.read_le(&bytes[at..]) as usize;
                        take(&mut offset, n * item.size(), element, read)?;
                        values.push(f64::NAN);
                    }
                }
            }
            if let Some(layout) = &layout {
                data.push(layout, &values, || format!("byte {entry_offset}"))?;
            }
        }
    }
    Ok(data)
}

/// Serializes a cloud as PLY. Positions and normals are written as doubles.
pub fn write_ply(cloud: &PointCloud, encoding: PlyEncoding, colors: ColorEncoding) -> Vec<u8> {
    let mut out = Vec::new();
    let fmt = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    let color_ty = match colors {
        ColorEncoding::Uchar => "uchar",
        ColorEncoding::Float => "float",
    };
    writeln!(out, "ply\nformat {fmt} 1.0\nelement vertex {}", cloud.len()).unwrap();
    for axis in ["x", "y", "z"] {
        writeln!(out, "property double {axis}").unwrap();
    }
    if cloud.colors().is_some() {
        for ch in ["red", "green", "blue"] {
            writeln!(out, "property {color_ty} {ch}").unwrap();
        }
    }
    if cloud.normals().is_some() {
        for axis in ["nx", "ny", "nz"] {
            writeln!(out, "property double {axis}").unwrap();
        }
    }
    writeln!(out, "end_header").unwrap();

    let quantize = |c: f64| (c.clamp(0.0, 1.0) * 255.0).round() as u8;
    for i in 0..cloud.len() {
        let p = cloud.positions()[i];
        match encoding {
            PlyEncoding::Ascii => {
                let mut fields: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
                if let Some(c) = cloud.colors() {
                    fields.extend(c[i].iter().map(|&v| match colors {
                        ColorEncoding::Uchar => quantize(v).to_string(),
                        ColorEncoding::Float => format!("{:?}", v as f32),
                    }));
                }
                if let Some(n) = cloud.normals() {
                    fields.extend(n[i].iter().map(|v| format!("{v:?}")));
                }
                writeln!(out, "{}", fields.join(" ")).unwrap();
            }
            PlyEncoding::BinaryLittleEndian => {
                for v in p.iter() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                if let Some(c) = cloud.colors() {
                    for &v in c[i].iter() {
                        match colors {
                            ColorEncoding::Uchar => out.push(quantize(v)),
                            ColorEncoding::Float => out.extend_from_slice(&(v as f32).to_le_bytes()),
                        }
                    }
                }
                if let Some(n) = cloud.normals() {
                    for v in n[i].iter() {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                }
            }
        }
    }
    out
}

pub fn save_ply(
    cloud: &PointCloud,
    path: impl AsRef<Path>,
    encoding: PlyEncoding,
    colors: ColorEncoding,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_ply(cloud, encoding, colors)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const XYZ: &str = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 0 0\n0 1 0\n";

    #[test]
    fn minimal_ascii_xyz() {
        let cloud = parse_ply(XYZ.as_bytes()).unwrap();
        assert_eq!(cloud.len(), 3);
        assert!(cloud.colors().is_none());
        assert!(cloud.normals().is_none());
        assert_eq!(cloud.positions()[1], Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn uchar_colors_are_rescaled() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n0 0 0 255 0 0\n";
        let cloud = parse_ply(text.as_bytes()).unwrap();
        assert_eq!(cloud.colors().unwrap()[0], Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn truncated_ascii_payload() {
        let mut text = String::from("ply\nformat ascii 1.0\nelement vertex 10\nproperty float x\nproperty float y\nproperty float z\nend_header\n");
        for i in 0..9 {
            text.push_str(&format!("{i} 0 0\n"));
        }
        let err = parse_ply(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("truncated payload"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn truncated_binary_payload_names_offset() {
        let cloud = PointCloud::from_positions(vec![Vec3::zeros(), Vec3::x()]).unwrap();
        let mut bytes = write_ply(&cloud, PlyEncoding::BinaryLittleEndian, ColorEncoding::Uchar);
        bytes.truncate(bytes.len() - 4);
        let err = parse_ply(&bytes).unwrap_err().to_string();
        assert!(err.contains("truncated payload") && err.contains("byte"), "{err}");
    }

    #[test]
    fn non_finite_coordinate_is_rejected() {
        let text = XYZ.replace("1 0 0", "nan 0 0");
        let err = parse_ply(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("non-finite") && err.contains("line 9"), "{err}");
    }

    #[test]
    fn malformed_header() {
        assert!(parse_ply(b"ply\nformat ascii 1.0\nelement vertex 1\nproperty foo x\nend_header\n").is_err());
        assert!(parse_ply(b"plx\n").is_err());
        assert!(parse_ply(b"ply\nformat binary_big_endian 1.0\nend_header\n").is_err());
    }

    #[test]
    fn other_elements_are_skipped() {
        let text = "ply\nformat ascii 1.0\nelement camera 1\nproperty float fov\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n45\n1 2 3\n3 0 0 0\n";
        let cloud = parse_ply(text.as_bytes()).unwrap();
        assert_eq!(cloud.positions()[0], Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn partial_normals_are_dropped() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty float nx\nproperty float ny\nend_header\n0 0 0 0 1\n";
        assert!(parse_ply(text.as_bytes()).unwrap().normals().is_none());
    }
}
