//! File formats.
//!
//! Frames use a short text header followed by a little-endian binary body.
//! Everything else is line-oriented text: a `MAGIC VERSION` header, a
//! `count N` line, then one record per line. Blank lines and lines starting
//! with `#` are ignored. Floats are written in shortest round-trip form.

mod config;

pub use config::PipelineConfig;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::Serialize;
use thiserror::Error;

use crate::color::ColorMatrix;
use crate::descriptor::{ContextDescriptor, DESCRIPTOR_DIM};
use crate::ecv::{Intrinsics, Primitive, PrimitiveKind, RgbdFrame};
use crate::geometry::{Point3, RigidTransform};
use crate::matching::{Correspondence, CorrespondenceSet};

pub const FRAME_MAGIC: &str = "ECVFRAME";
pub const PRIMITIVE_MAGIC: &str = "ECVPRIM";
pub const DESCRIPTOR_MAGIC: &str = "ECVDESC";
pub const CORRESPONDENCE_MAGIC: &str = "ECVCORR";
pub const POSE_MAGIC: &str = "ECVPOSE";
pub const COLOR_MAGIC: &str = "ECVCOLOR";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}{}: {message}", record.map(|r| format!(", record {r}")).unwrap_or_default())]
    Parse {
        line: usize,
        record: Option<usize>,
        message: String,
    },
    #[error("{format} version mismatch: expected {expected}, found {found}")]
    VersionMismatch {
        format: &'static str,
        expected: u32,
        found: String,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown config key '{key}' at line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("invalid value for '{key}': {message}")]
    InvalidValue { key: String, message: String },
}

impl IoError {
    pub fn category(&self) -> &'static str {
        match self {
            IoError::Io(_) => "IoError",
            IoError::Parse { .. } => "ParseError",
            IoError::VersionMismatch { .. } => "VersionMismatch",
            IoError::DimensionMismatch(_) => "DimensionMismatch",
            IoError::UnknownKey { .. } => "UnknownKey",
            IoError::InvalidValue { .. } => "InvalidValue",
        }
    }

    fn parse(line: usize, record: Option<usize>, message: impl Into<String>) -> Self {
        IoError::Parse {
            line,
            record,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, IoError>;

// ---------------------------------------------------------------------------
// Frames

/// Writes the frame format: four header lines then `width·height` pixels of
/// `r g b` bytes and an f32 depth, row-major.
pub fn write_frame<W: Write>(mut w: W, frame: &RgbdFrame) -> Result<()> {
    let i = frame.intrinsics();
    writeln!(w, "{FRAME_MAGIC} {FORMAT_VERSION}")?;
    writeln!(w, "{} {}", frame.width(), frame.height())?;
    writeln!(w, "{:?} {:?} {:?} {:?}", i.fx, i.fy, i.cx, i.cy)?;
    writeln!(w, "data")?;
    let mut body = Vec::with_capacity(frame.width() * frame.height() * 7);
    for (c, d) in frame.rgb_raw().iter().zip(frame.depth_raw()) {
        body.extend_from_slice(c);
        body.extend_from_slice(&d.to_le_bytes());
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

fn read_header_line<R: BufRead>(r: &mut R, line: usize, offset: &mut usize) -> Result<String> {
    let mut buf = Vec::new();
    let n = r.read_until(b'\n', &mut buf)?;
    if n == 0 || buf.last() != Some(&b'\n') {
        return Err(IoError::parse(line, None, format!("truncated header at byte {offset}")));
    }
    *offset += n;
    buf.pop();
    String::from_utf8(buf).map_err(|_| IoError::parse(line, None, "header is not valid UTF-8"))
}

fn parse_fields<T: std::str::FromStr>(text: &str, expected: usize, line: usize, what: &str) -> Result<Vec<T>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != expected {
        return Err(IoError::parse(
            line,
            None,
            format!("expected {expected} {what} values, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>()
                .map_err(|_| IoError::parse(line, None, format!("invalid {what} value '{f}'")))
        })
        .collect()
}

pub fn read_frame<R: BufRead>(mut r: R) -> Result<RgbdFrame> {
    let mut offset = 0;
    let magic = read_header_line(&mut r, 1, &mut offset)?;
    check_magic(&magic, FRAME_MAGIC, 1)?;
    let dims: Vec<usize> = parse_fields(&read_header_line(&mut r, 2, &mut offset)?, 2, 2, "dimension")?;
    let k: Vec<f64> = parse_fields(&read_header_line(&mut r, 3, &mut offset)?, 4, 3, "intrinsic")?;
    let marker = read_header_line(&mut r, 4, &mut offset)?;
    if marker.trim() != "data" {
        return Err(IoError::parse(4, None, format!("expected 'data', found '{marker}'")));
    }
    let (w, h) = (dims[0], dims[1]);
    let n = w
        .checked_mul(h)
        .filter(|n| *n > 0)
        .ok_or_else(|| IoError::DimensionMismatch(format!("invalid frame size {w}x{h}")))?;
    let mut body = Vec::with_capacity(n * 7);
    r.read_to_end(&mut body)?;
    if body.len() != n * 7 {
        let pixel = body.len() / 7;
        return Err(if body.len() < n * 7 {
            IoError::parse(
                5,
                Some(pixel),
                format!(
                    "truncated body at byte {}: expected {} bytes, found {}",
                    offset + body.len(),
                    n * 7,
                    body.len()
                ),
            )
        } else {
            IoError::DimensionMismatch(format!(
                "body has {} bytes, {w}x{h} frame needs {}",
                body.len(),
                n * 7
            ))
        });
    }
    let mut rgb = Vec::with_capacity(n);
    let mut depth = Vec::with_capacity(n);
    for px in body.chunks_exact(7) {
        rgb.push([px[0], px[1], px[2]]);
        depth.push(f32::from_le_bytes([px[3], px[4], px[5], px[6]]));
    }
    RgbdFrame::new(w, h, rgb, depth, Intrinsics::new(k[0], k[1], k[2], k[3]))
        .map_err(|e| IoError::DimensionMismatch(e.to_string()))
}

pub fn save_frame(path: impl AsRef<Path>, frame: &RgbdFrame) -> Result<()> {
    write_frame(BufWriter::new(File::create(path)?), frame)
}

pub fn load_frame(path: impl AsRef<Path>) -> Result<RgbdFrame> {
    read_frame(BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------------
// Text records

fn check_magic(line: &str, magic: &'static str, line_no: usize) -> Result<()> {
    let mut it = line.split_whitespace();
    if it.next() != Some(magic) {
        return Err(IoError::parse(line_no, None, format!("expected '{magic}' header")));
    }
    match it.next() {
        Some(v) if v == FORMAT_VERSION.to_string() && it.next().is_none() => Ok(()),
        found => Err(IoError::VersionMismatch {
            format: magic,
            expected: FORMAT_VERSION,
            found: found.unwrap_or("").to_string(),
        }),
    }
}

/// Non-comment lines with their 1-based line numbers.
struct Records<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Records<R> {
    fn new(r: R) -> Self {
        Self {
            inner: r.lines(),
            line: 0,
        }
    }

    fn next_line(&mut self) -> Result<Option<(usize, String)>> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Ok(Some((self.line, t.to_string())));
        }
        Ok(None)
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, String)> {
        self.next_line()?
            .ok_or_else(|| IoError::parse(self.line + 1, None, format!("unexpected end of file, expected {what}")))
    }

    /// Reads the header and count lines, returning the count.
    fn header(&mut self, magic: &'static str) -> Result<usize> {
        let (line, text) = self.expect_line("header")?;
        check_magic(&text, magic, line)?;
        let (line, text) = self.expect_line("count line")?;
        let mut it = text.split_whitespace();
        match (it.next(), it.next().map(str::parse::<usize>), it.next()) {
            (Some("count"), Some(Ok(n)), None) => Ok(n),
            _ => Err(IoError::parse(line, None, "expected 'count N'")),
        }
    }

    /// Reads exactly `count` records, then requires end of file.
    fn records<T>(&mut self, count: usize, mut parse: impl FnMut(usize, usize, &[&str]) -> Result<T>) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(count);
        for rec in 0..count {
            let (line, text) = self
                .next_line()?
                .ok_or_else(|| IoError::parse(self.line + 1, Some(rec), format!("missing record {rec} of {count}")))?;
            let fields: Vec<&str> = text.split_whitespace().collect();
            out.push(parse(line, rec, &fields)?);
        }
        if let Some((line, _)) = self.next_line()? {
            return Err(IoError::parse(line, Some(count), format!("extra record after declared count {count}")));
        }
        Ok(out)
    }
}

fn field<T: std::str::FromStr>(fields: &[&str], k: usize, line: usize, rec: usize) -> Result<T> {
    let f = fields[k];
    f.parse::<T>()
        .map_err(|_| IoError::parse(line, Some(rec), format!("invalid value '{f}' in field {k}")))
}

fn finite(fields: &[&str], k: usize, line: usize, rec: usize) -> Result<f64> {
    let v: f64 = field(fields, k, line, rec)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(IoError::parse(line, Some(rec), format!("non-finite value in field {k}")))
    }
}

fn arity(fields: &[&str], expected: usize, line: usize, rec: usize) -> Result<()> {
    if fields.len() == expected {
        Ok(())
    } else {
        Err(IoError::parse(
            line,
            Some(rec),
            format!("record {rec} has {} fields, expected {expected}", fields.len()),
        ))
    }
}

fn kind(fields: &[&str], k: usize, line: usize, rec: usize) -> Result<PrimitiveKind> {
    PrimitiveKind::parse(fields[k])
        .ok_or_else(|| IoError::parse(line, Some(rec), format!("unknown primitive kind '{}'", fields[k])))
}

/// `kind x y z ox oy oz r g b u v` per record.
pub fn write_primitives<W: Write>(mut w: W, prims: &[Primitive]) -> Result<()> {
    writeln!(w, "{PRIMITIVE_MAGIC} {FORMAT_VERSION}")?;
    writeln!(w, "count {}", prims.len())?;
    for p in prims {
        let (o, c) = (p.orientation, p.color);
        writeln!(
            w,
            "{} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {} {}",
            p.kind.as_str(),
            p.position.x,
            p.position.y,
            p.position.z,
            o.x,
            o.y,
            o.z,
            c[0],
            c[1],
            c[2],
            p.pixel.0,
            p.pixel.1
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_primitives<R: BufRead>(r: R) -> Result<Vec<Primitive>> {
    let mut rec = Records::new(r);
    let n = rec.header(PRIMITIVE_MAGIC)?;
    rec.records(n, |line, i, f| {
        arity(f, 12, line, i)?;
        let v = |k| finite(f, k, line, i);
        Ok(Primitive {
            kind: kind(f, 0, line, i)?,
            position: Point3::new(v(1)?, v(2)?, v(3)?),
            orientation: Vector3::new(v(4)?, v(5)?, v(6)?),
            color: [v(7)?, v(8)?, v(9)?],
            pixel: (field(f, 10, line, i)?, field(f, 11, line, i)?),
        })
    })
}

/// `source_index kind v0 … v95` per record.
pub fn write_descriptors<W: Write>(mut w: W, descs: &[ContextDescriptor]) -> Result<()> {
    writeln!(w, "{DESCRIPTOR_MAGIC} {FORMAT_VERSION}")?;
    writeln!(w, "count {}", descs.len())?;
    let mut line = String::new();
    for d in descs {
        use std::fmt::Write as _;
        line.clear();
        write!(line, "{} {}", d.source_index, d.kind.as_str()).expect("string write");
        for v in &d.values {
            write!(line, " {v:?}").expect("string write");
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_descriptors<R: BufRead>(r: R) -> Result<Vec<ContextDescriptor>> {
    let mut rec = Records::new(r);
    let n = rec.header(DESCRIPTOR_MAGIC)?;
    rec.records(n, |line, i, f| {
        if f.len() != DESCRIPTOR_DIM + 2 {
            return Err(IoError::parse(
                line,
                Some(i),
                format!(
                    "descriptor record {i} has {} values, expected {DESCRIPTOR_DIM}",
                    f.len().saturating_sub(2)
                ),
            ));
        }
        let mut values = [0.0; DESCRIPTOR_DIM];
        for (k, v) in values.iter_mut().enumerate() {
            *v = finite(f, k + 2, line, i)?;
        }
        Ok(ContextDescriptor {
            values,
            source_index: field(f, 0, line, i)?,
            kind: kind(f, 1, line, i)?,
        })
    })
}

/// `object_index scene_index distance` per record.
pub fn write_correspondences<W: Write>(mut w: W, corr: &CorrespondenceSet) -> Result<()> {
    writeln!(w, "{CORRESPONDENCE_MAGIC} {FORMAT_VERSION}")?;
    writeln!(w, "count {}", corr.len())?;
    for c in corr.iter() {
        writeln!(w, "{} {} {:?}", c.object_index, c.scene_index, c.distance)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_correspondences<R: BufRead>(r: R) -> Result<CorrespondenceSet> {
    let mut rec = Records::new(r);
    let n = rec.header(CORRESPONDENCE_MAGIC)?;
    let mut last: Option<usize> = None;
    let entries = rec.records(n, |line, i, f| {
        arity(f, 3, line, i)?;
        let c = Correspondence {
            object_index: field(f, 0, line, i)?,
            scene_index: field(f, 1, line, i)?,
            distance: finite(f, 2, line, i)?,
        };
        if last.is_some_and(|l| c.object_index <= l) {
            return Err(IoError::parse(line, Some(i), "object indices must be strictly increasing"));
        }
        last = Some(c.object_index);
        Ok(c)
    })?;
    Ok(CorrespondenceSet::new(entries))
}

/// Four rows of the homogeneous matrix.
pub fn write_pose<W: Write>(mut w: W, pose: &RigidTransform) -> Result<()> {
    writeln!(w, "{POSE_MAGIC} {FORMAT_VERSION}")?;
    let m = pose.to_homogeneous();
    for r in 0..4 {
        writeln!(w, "{:?} {:?} {:?} {:?}", m[(r, 0)], m[(r, 1)], m[(r, 2)], m[(r, 3)])?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: BufRead>(rec: &mut Records<R>, rows: usize, cols: usize) -> Result<Vec<Vec<f64>>> {
    (0..rows)
        .map(|r| {
            let (line, text) = rec.expect_line("matrix row")?;
            let f: Vec<&str> = text.split_whitespace().collect();
            arity(&f, cols, line, r)?;
            (0..cols).map(|k| finite(&f, k, line, r)).collect()
        })
        .collect()
}

pub fn read_pose<R: BufRead>(r: R) -> Result<RigidTransform> {
    let mut rec = Records::new(r);
    let (line, text) = rec.expect_line("header")?;
    check_magic(&text, POSE_MAGIC, line)?;
    let rows = read_rows(&mut rec, 4, 4)?;
    if let Some((line, _)) = rec.next_line()? {
        return Err(IoError::parse(line, None, "trailing data after pose"));
    }
    let m = Matrix4::from_fn(|r, c| rows[r][c]);
    if m.fixed_view::<1, 4>(3, 0) != Matrix4::<f64>::identity().fixed_view::<1, 4>(3, 0) {
        return Err(IoError::parse(5, None, "last row must be 0 0 0 1"));
    }
    let pose = RigidTransform::new(m.fixed_view::<3, 3>(0, 0).into_owned(), m.fixed_view::<3, 1>(0, 3).into_owned());
    if !pose.is_valid(1e-6) {
        return Err(IoError::parse(2, None, "rotation block is not a rotation matrix"));
    }
    Ok(pose)
}

/// Three rows of `a`, then an `offset` line if the offset is non-zero.
pub fn write_color_matrix<W: Write>(mut w: W, m: &ColorMatrix) -> Result<()> {
    writeln!(w, "{COLOR_MAGIC} {FORMAT_VERSION}")?;
    for r in 0..3 {
        writeln!(w, "{:?} {:?} {:?}", m.a[(r, 0)], m.a[(r, 1)], m.a[(r, 2)])?;
    }
    if m.offset != Vector3::zeros() {
        writeln!(w, "offset {:?} {:?} {:?}", m.offset.x, m.offset.y, m.offset.z)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_color_matrix<R: BufRead>(r: R) -> Result<ColorMatrix> {
    let mut rec = Records::new(r);
    let (line, text) = rec.expect_line("header")?;
    check_magic(&text, COLOR_MAGIC, line)?;
    let rows = read_rows(&mut rec, 3, 3)?;
    let a = Matrix3::from_fn(|r, c| rows[r][c]);
    let mut offset = Vector3::zeros();
    if let Some((line, text)) = rec.next_line()? {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.first() != Some(&"offset") || f.len() != 4 {
            return Err(IoError::parse(line, None, "expected 'offset r g b'"));
        }
        offset = Vector3::new(finite(&f, 1, line, 0)?, finite(&f, 2, line, 0)?, finite(&f, 3, line, 0)?);
        if let Some((line, _)) = rec.next_line()? {
            return Err(IoError::parse(line, None, "trailing data after color matrix"));
        }
    }
    Ok(ColorMatrix { a, offset })
}

/// Labeled color pairs: six values per line, `r g b r g b` (source then
/// target), optionally separated by `->`.
pub fn read_color_pairs<R: BufRead>(r: R) -> Result<Vec<([f64; 3], [f64; 3])>> {
    let mut rec = Records::new(r);
    let mut out = Vec::new();
    while let Some((line, text)) = rec.next_line()? {
        let f: Vec<&str> = text.split_whitespace().filter(|t| *t != "->").collect();
        let i = out.len();
        arity(&f, 6, line, i)?;
        let v = |k| finite(&f, k, line, i);
        out.push(([v(0)?, v(1)?, v(2)?], [v(3)?, v(4)?, v(5)?]));
    }
    Ok(out)
}

pub fn write_color_pairs<W: Write>(mut w: W, pairs: &[([f64; 3], [f64; 3])]) -> Result<()> {
    for (s, t) in pairs {
        writeln!(w, "{:?} {:?} {:?} -> {:?} {:?} {:?}", s[0], s[1], s[2], t[0], t[1], t[2])?;
    }
    w.flush()?;
    Ok(())
}

macro_rules! file_pair {
    ($save:ident, $load:ident, $write:ident, $read:ident, $ty:ty, $arg:ty) => {
        pub fn $save(path: impl AsRef<Path>, value: $arg) -> Result<()> {
            $write(BufWriter::new(File::create(path)?), value)
        }

        pub fn $load(path: impl AsRef<Path>) -> Result<$ty> {
            $read(BufReader::new(File::open(path)?))
        }
    };
}

file_pair!(save_primitives, load_primitives, write_primitives, read_primitives, Vec<Primitive>, &[Primitive]);
file_pair!(
    save_descriptors,
    load_descriptors,
    write_descriptors,
    read_descriptors,
    Vec<ContextDescriptor>,
    &[ContextDescriptor]
);
file_pair!(
    save_correspondences,
    load_correspondences,
    write_correspondences,
    read_correspondences,
    CorrespondenceSet,
    &CorrespondenceSet
);
file_pair!(save_pose, load_pose, write_pose, read_pose, RigidTransform, &RigidTransform);
file_pair!(save_color_matrix, load_color_matrix, write_color_matrix, read_color_matrix, ColorMatrix, &ColorMatrix);
file_pair!(
    save_color_pairs,
    load_color_pairs,
    write_color_pairs,
    read_color_pairs,
    Vec<([f64; 3], [f64; 3])>,
    &[([f64; 3], [f64; 3])]
);

// ---------------------------------------------------------------------------
// Reports

/// Row-major 4×4 matrix for JSON reports.
pub fn pose_rows(pose: &RigidTransform) -> [[f64; 4]; 4] {
    let m = pose.to_homogeneous();
    std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> RgbdFrame {
        RgbdFrame::new(
            2,
            2,
            vec![[1, 2, 3], [4, 5, 6], [7, 8, 9], [250, 251, 252]],
            vec![1.0, 0.0, 1.5, f32::NAN],
            Intrinsics::new(500.0, 501.0, 0.5, 0.5),
        )
        .unwrap()
    }

    fn frame_bytes(f: &RgbdFrame) -> Vec<u8> {
        let mut buf = Vec::new();
        write_frame(&mut buf, f).unwrap();
        buf
    }

    #[test]
    fn two_by_two_frame() {
        let f = frame();
        let back = read_frame(&frame_bytes(&f)[..]).unwrap();
        assert_eq!(back.width() * back.height(), 4);
        assert_eq!(back.rgb_raw(), f.rgb_raw());
        assert_eq!(back.depth(1, 0), None);
        assert_eq!(back.depth(0, 1), Some(1.5));
        assert!(back.depth_raw()[3].is_nan());
    }

    #[test]
    fn truncated_frame_is_a_parse_error() {
        let bytes = frame_bytes(&frame());
        for cut in [5, 20, bytes.len() - 1] {
            let err = read_frame(&bytes[..cut]).unwrap_err();
            assert_eq!(err.category(), "ParseError", "cut {cut}: {err}");
        }
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(read_frame(&long[..]).unwrap_err().category(), "DimensionMismatch");
    }

    #[test]
    fn version_header_is_checked() {
        let text = "ECVPRIM 2\ncount 0\n";
        assert!(matches!(read_primitives(text.as_bytes()), Err(IoError::VersionMismatch { .. })));
        let text = "ECVDESC 1\ncount 0\n";
        assert!(matches!(read_primitives(text.as_bytes()), Err(IoError::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_primitive_list() {
        let mut buf = Vec::new();
        write_primitives(&mut buf, &[]).unwrap();
        assert!(read_primitives(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn short_descriptor_record_names_the_record() {
        let mut text = String::from("ECVDESC 1\n# comment\ncount 2\n");
        text.push_str(&format!("0 texlet{}\n", " 0.0".repeat(96)));
        text.push_str(&format!("3 segment{}\n", " 0.0".repeat(95)));
        match read_descriptors(text.as_bytes()) {
            Err(IoError::Parse { line, record, message }) => {
                assert_eq!((line, record), (5, Some(1)));
                assert!(message.contains("record 1"), "{message}");
                assert!(message.contains("95"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn count_must_match() {
        let text = "ECVCORR 1\ncount 2\n0 1 0.5\n";
        assert!(matches!(read_correspondences(text.as_bytes()), Err(IoError::Parse { record: Some(1), .. })));
        let text = "ECVCORR 1\ncount 1\n0 1 0.5\n1 2 0.5\n";
        assert!(matches!(read_correspondences(text.as_bytes()), Err(IoError::Parse { line: 4, .. })));
    }

    #[test]
    fn pose_and_color_round_trip() {
        let pose = RigidTransform::from_axis_angle(Vector3::new(1.0, -2.0, 0.5), 0.7, Vector3::new(0.1, 0.2, -0.3));
        let mut buf = Vec::new();
        write_pose(&mut buf, &pose).unwrap();
        assert_eq!(read_pose(&buf[..]).unwrap(), pose);

        let m = ColorMatrix {
            a: Matrix3::new(0.9, 0.1, 0.0, 0.0, 1.1, 0.2, 0.3, 0.0, 0.7),
            offset: Vector3::new(0.01, 0.0, -0.02),
        };
        let mut buf = Vec::new();
        write_color_matrix(&mut buf, &m).unwrap();
        assert_eq!(read_color_matrix(&buf[..]).unwrap(), m);
        let mut buf = Vec::new();
        write_color_matrix(&mut buf, &ColorMatrix::identity()).unwrap();
        assert_eq!(read_color_matrix(&buf[..]).unwrap(), ColorMatrix::identity());
    }

    #[test]
    fn color_pairs_accept_arrow() {
        let text = "# src -> tgt\n0.1 0.2 0.3 -> 0.4 0.5 0.6\n1 1 1 0 0 0\n";
        let pairs = read_color_pairs(text.as_bytes()).unwrap();
        assert_eq!(pairs, vec![([0.1, 0.2, 0.3], [0.4, 0.5, 0.6]), ([1.0; 3], [0.0; 3])]);
        assert!(read_color_pairs("1 2 3 4 5\n".as_bytes()).is_err());
    }
}
