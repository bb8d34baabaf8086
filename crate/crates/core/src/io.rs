//! Point clouds on disk (xyz, PLY), skeleton/pose JSON and the binary point
//! format served over HTTP.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::sphere_mesh::{Pose, Skeleton, SkeletonFile};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<Vec3>,
    pub colors: Option<Vec<[u8; 3]>>,
}

impl PointCloud {
    pub fn new(positions: Vec<Vec3>) -> PointCloud {
        PointCloud { positions, colors: None }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Xyz,
    PlyAscii,
    PlyBinary,
}

impl Format {
    /// From the file extension; `.ply` is written as binary.
    pub fn from_path(path: &Path) -> Result<Format> {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref() {
            Some("xyz") | Some("txt") => Ok(Format::Xyz),
            Some("ply") => Ok(Format::PlyBinary),
            other => Err(Error::UnsupportedFormat(other.unwrap_or("<none>").to_string())),
        }
    }
}

fn parse_err(location: String, message: impl Into<String>) -> Error {
    Error::Parse {
        location,
        message: message.into(),
    }
}

/// Loads a cloud; the PLY flavour is read from the header.
pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let bytes = std::fs::read(path)?;
    match Format::from_path(path)? {
        Format::Xyz => parse_xyz(&bytes),
        _ => parse_ply(&bytes),
    }
}

pub fn save_cloud(cloud: &PointCloud, path: &Path, format: Format) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        Format::Xyz => write_xyz(cloud, &mut out)?,
        Format::PlyAscii => write_ply(cloud, &mut out, false)?,
        Format::PlyBinary => write_ply(cloud, &mut out, true)?,
    }
    out.flush()?;
    Ok(())
}

/// One point per line, three coordinates; further columns are ignored,
/// blank lines and `#` comments skipped.
pub fn parse_xyz(bytes: &[u8]) -> Result<PointCloud> {
    let mut positions = Vec::new();
    for (n, line) in bytes.lines().enumerate() {
        let line = line.map_err(|e| parse_err(format!("line {}", n + 1), e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut c = [0.0f64; 3];
        let mut fields = line.split(|ch: char| ch.is_whitespace() || ch == ',').filter(|s| !s.is_empty());
        for v in c.iter_mut() {
            let f = fields.next().ok_or_else(|| parse_err(format!("line {}", n + 1), "expected 3 coordinates"))?;
            *v = f
                .parse()
                .map_err(|_| parse_err(format!("line {}", n + 1), format!("bad number {f:?}")))?;
        }
        if !c.iter().all(|v| v.is_finite()) {
            return Err(parse_err(format!("line {}", n + 1), "non-finite coordinate"));
        }
        positions.push(Vec3::from(c));
    }
    Ok(PointCloud::new(positions))
}

pub fn write_xyz(cloud: &PointCloud, out: &mut impl Write) -> Result<()> {
    for p in &cloud.positions {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
    }
    Ok(())
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
    fn parse(s: &str) -> Option<Scalar> {
        Some(match s {
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

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List(Scalar, Scalar),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct Header {
    binary: bool,
    elements: Vec<Element>,
    /// Byte offset of the body.
    body: usize,
    lines: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut line_no = 0;
    let next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let end = bytes[*pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| *pos + i);
        let s = String::from_utf8_lossy(&bytes[*pos..end]).trim_end_matches('\r').to_string();
        *pos = (end + 1).min(bytes.len());
        Some(s)
    };
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let Some(line) = next_line(&mut pos) else {
            return Err(parse_err(format!("line {}", line_no + 1), "unterminated PLY header"));
        };
        line_no += 1;
        let loc = || format!("line {line_no}");
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["ply"] if line_no == 1 => {}
            _ if line_no == 1 => return Err(parse_err(loc(), "missing 'ply' magic")),
            ["format", f, _] => {
                format = Some(match *f {
                    "ascii" => false,
                    "binary_little_endian" => true,
                    other => return Err(Error::UnsupportedFormat(format!("PLY {other}"))),
                })
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| parse_err(loc(), "bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", c, t, _] => {
                let el = elements.last_mut().ok_or_else(|| parse_err(loc(), "property before element"))?;
                let c = Scalar::parse(c).ok_or_else(|| parse_err(loc(), "bad list count type"))?;
                let t = Scalar::parse(t).ok_or_else(|| parse_err(loc(), "bad list item type"))?;
                el.props.push(Property::List(c, t));
            }
            ["property", t, name] => {
                let el = elements.last_mut().ok_or_else(|| parse_err(loc(), "property before element"))?;
                let t = Scalar::parse(t).ok_or_else(|| parse_err(loc(), format!("bad property type {t}")))?;
                el.props.push(Property::Scalar(name.to_string(), t));
            }
            ["end_header"] => break,
            _ => return Err(parse_err(loc(), format!("unexpected header line {line:?}"))),
        }
    }
    let binary = format.ok_or_else(|| parse_err(format!("line {line_no}"), "missing format line"))?;
    Ok(Header {
        binary,
        elements,
        body: pos,
        lines: line_no,
    })
}

/// Indices of x, y, z and optional red, green, blue among the vertex
/// properties.
fn vertex_layout(el: &Element) -> Result<([usize; 3], Option<[usize; 3]>)> {
    let find = |n: &str| {
        el.props
            .iter()
            .position(|p| matches!(p, Property::Scalar(name, _) if name == n))
    };
    let mut xyz = [0; 3];
    for (i, n) in ["x", "y", "z"].iter().enumerate() {
        xyz[i] = find(n).ok_or_else(|| parse_err("header".into(), format!("vertex has no {n} property")))?;
        if let Property::Scalar(_, t) = el.props[xyz[i]] {
            if !matches!(t, Scalar::F32 | Scalar::F64) {
                return Err(Error::UnsupportedFormat(format!("vertex {n} must be float or double")));
            }
        }
    }
    let rgb = match (find("red"), find("green"), find("blue")) {
        (Some(r), Some(g), Some(b)) => Some([r, g, b]),
        _ => None,
    };
    Ok((xyz, rgb))
}

pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let mut positions = Vec::new();
    let mut colors = Vec::new();
    let mut has_rgb = false;
    let mut pos = header.body;
    let mut line = header.lines;
    let mut ascii_lines = if header.binary {
        None
    } else {
        Some(bytes[header.body..].lines())
    };
    for el in &header.elements {
        let layout = if el.name == "vertex" { Some(vertex_layout(el)?) } else { None };
        has_rgb |= layout.is_some_and(|l| l.1.is_some());
        positions.reserve(if layout.is_some() { el.count } else { 0 });
        let mut values = vec![0.0; el.props.len()];
        for _ in 0..el.count {
            if let Some(lines) = ascii_lines.as_mut() {
                line += 1;
                let loc = || format!("line {line}");
                let text = lines
                    .next()
                    .ok_or_else(|| parse_err(loc(), format!("expected {} more {} rows", el.count, el.name)))?
                    .map_err(|e| parse_err(loc(), e.to_string()))?;
                let mut words = text.split_whitespace();
                let mut num = || -> Result<f64> {
                    let w = words.next().ok_or_else(|| parse_err(loc(), "row too short"))?;
                    w.parse().map_err(|_| parse_err(loc(), format!("bad number {w:?}")))
                };
                for (i, p) in el.props.iter().enumerate() {
                    match p {
                        Property::Scalar(..) => values[i] = num()?,
                        Property::List(..) => {
                            let n = num()? as usize;
                            for _ in 0..n {
                                num()?;
                            }
                        }
                    }
                }
            } else {
                for (i, p) in el.props.iter().enumerate() {
                    let take = |pos: &mut usize, s: Scalar| -> Result<f64> {
                        let end = *pos + s.size();
                        if end > bytes.len() {
                            return Err(parse_err(format!("byte {pos}"), "unexpected end of data"));
                        }
                        let v = s.read_le(&bytes[*pos..end]);
                        *pos = end;
                        Ok(v)
                    };
                    match *p {
                        Property::Scalar(_, s) => values[i] = take(&mut pos, s)?,
                        Property::List(c, s) => {
                            let n = take(&mut pos, c)? as usize;
                            let skip = n * s.size();
                            if pos + skip > bytes.len() {
                                return Err(parse_err(format!("byte {pos}"), "unexpected end of data"));
                            }
                            pos += skip;
                        }
                    }
                }
            }
            if let Some((xyz, rgb)) = layout {
                let p = Vec3::new(values[xyz[0]], values[xyz[1]], values[xyz[2]]);
                if !p.iter().all(|v| v.is_finite()) {
                    let loc = if header.binary { format!("byte {pos}") } else { format!("line {line}") };
                    return Err(parse_err(loc, "non-finite coordinate"));
                }
                positions.push(p);
                if let Some(c) = rgb {
                    colors.push(c.map(|i| values[i].clamp(0.0, 255.0) as u8));
                }
            }
        }
    }
    Ok(PointCloud {
        positions,
        colors: has_rgb.then_some(colors),
    })
}

/// Doubles for positions, so binary round trips are bit-exact.
pub fn write_ply(cloud: &PointCloud, out: &mut impl Write, binary: bool) -> Result<()> {
    let colors = cloud.colors.as_ref().filter(|c| c.len() == cloud.positions.len());
    writeln!(out, "ply")?;
    writeln!(out, "format {} 1.0", if binary { "binary_little_endian" } else { "ascii" })?;
    writeln!(out, "element vertex {}", cloud.positions.len())?;
    for c in ["x", "y", "z"] {
        writeln!(out, "property double {c}")?;
    }
    if colors.is_some() {
        for c in ["red", "green", "blue"] {
            writeln!(out, "property uchar {c}")?;
        }
    }
    writeln!(out, "end_header")?;
    for (i, p) in cloud.positions.iter().enumerate() {
        if binary {
            for v in p.iter() {
                out.write_all(&v.to_le_bytes())?;
            }
            if let Some(c) = colors {
                out.write_all(&c[i])?;
            }
        } else {
            write!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
            if let Some(c) = colors {
                write!(out, " {} {} {}", c[i][0], c[i][1], c[i][2])?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn load_skeleton(path: &Path) -> Result<Skeleton> {
    let file: SkeletonFile = serde_json::from_slice(&std::fs::read(path)?)?;
    Skeleton::from_file(&file)
}

pub fn load_pose(path: &Path) -> Result<Pose> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

/// Indices kept at level of detail `k`: every ⌈n/k⌉-th point.
pub fn lod_indices(n: usize, k: Option<usize>) -> impl Iterator<Item = usize> {
    let stride = match k {
        Some(k) if k > 0 && k < n => n.div_ceil(k),
        Some(0) => n.max(1),
        _ => 1,
    };
    (0..n).step_by(stride)
}

/// `count: u32` then `count × 3` f32, all little-endian.
pub fn encode_points_f32(points: &[Vec3], lod: Option<usize>) -> Vec<u8> {
    let idx: Vec<usize> = lod_indices(points.len(), lod).collect();
    let mut out = Vec::with_capacity(4 + 12 * idx.len());
    out.extend_from_slice(&(idx.len() as u32).to_le_bytes());
    for i in idx {
        for v in points[i].iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_points_f32(bytes: &[u8]) -> Result<Vec<[f32; 3]>> {
    let head: [u8; 4] = bytes
        .get(..4)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| parse_err("byte 0".into(), "missing count"))?;
    let n = u32::from_le_bytes(head) as usize;
    if bytes.len() != 4 + 12 * n {
        return Err(parse_err("byte 4".into(), format!("expected {} bytes, got {}", 4 + 12 * n, bytes.len())));
    }
    Ok(bytes[4..]
        .chunks_exact(12)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes(c[i..i + 4].try_into().unwrap());
            [f(0), f(4), f(8)]
        })
        .collect())
}
