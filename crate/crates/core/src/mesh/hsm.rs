//! HSM v1 text format.
//!
//! ```text
//! # optional comment lines
//! HSM 1 <nv> <nf>
//! x y z pu pv tbm        (nv lines)
//! i j k                  (nf lines, 0-based)
//! ```
//!
//! Floats are written in shortest round-trip decimal form, so a saved surface
//! loads back bit-for-bit.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::{MeshError, ParamSurface, VertexRecord};
use crate::geometry::DiskPoint;

pub fn write_surface(surface: &ParamSurface) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "HSM 1 {} {}", surface.len(), surface.faces().len());
    for v in surface.vertices() {
        let [x, y, z] = v.position;
        let _ = writeln!(out, "{x} {y} {z} {} {} {}", v.param.u, v.param.v, v.tbm);
    }
    for [i, j, k] in surface.faces() {
        let _ = writeln!(out, "{i} {j} {k}");
    }
    out
}

pub fn parse_surface(text: &str) -> Result<ParamSurface, MeshError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (header_line, header) = lines
        .by_ref()
        .find(|(_, l)| !l.starts_with('#'))
        .ok_or(MeshError::Parse { line: 1, message: "missing HSM header".into() })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (nv, nf) = match fields.as_slice() {
        ["HSM", "1", nv, nf] => (
            parse_field::<usize>(nv, header_line, "vertex count")?,
            parse_field::<usize>(nf, header_line, "face count")?,
        ),
        ["HSM", version, ..] if *version != "1" => {
            return Err(parse_err(header_line, format!("unsupported HSM version {version}")))
        }
        _ => return Err(parse_err(header_line, "expected `HSM 1 <nv> <nf>`")),
    };

    let mut vertices = Vec::with_capacity(nv);
    for idx in 0..nv {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(header_line + idx + 1, format!("expected {nv} vertex lines, found {idx}")))?;
        let values = parse_row::<f64, 6>(text, line, "vertex")?;
        let [x, y, z, pu, pv, tbm] = values;
        let record = VertexRecord { position: [x, y, z], param: DiskPoint::new_unchecked(pu, pv), tbm };
        if !record.param.is_inside() {
            return Err(MeshError::Invalid {
                line,
                source: Box::new(MeshError::ParamOutsideDisk { vertex: idx, u: pu, v: pv }),
            });
        }
        vertices.push(record);
    }

    let mut faces = Vec::with_capacity(nf);
    let mut face_lines = Vec::with_capacity(nf);
    for idx in 0..nf {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(header_line + nv + idx + 1, format!("expected {nf} face lines, found {idx}")))?;
        faces.push(parse_row::<usize, 3>(text, line, "face")?);
        face_lines.push(line);
    }
    if let Some((line, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(line, "unexpected content after the last face"));
    }

    ParamSurface::build(vertices, faces).map_err(|e| {
        let line = match &e {
            MeshError::IndexOutOfRange { face, .. } | MeshError::DegenerateFace { face } => face_lines[*face],
            MeshError::NonFinite { vertex } | MeshError::ParamOutsideDisk { vertex, .. } => {
                header_line + vertex + 1
            }
            _ => header_line,
        };
        MeshError::Invalid { line, source: Box::new(e) }
    })
}

pub fn load_surface(path: impl AsRef<Path>) -> Result<ParamSurface, MeshError> {
    parse_surface(&fs::read_to_string(path)?)
}

/// Writes through a temporary sibling file and renames it into place.
pub fn save_surface(surface: &ParamSurface, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let path = path.as_ref();
    let tmp = path.with_extension("hsm.tmp");
    let mut file = fs::File::create(&tmp)?;
    file.write_all(write_surface(surface).as_bytes())?;
    file.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T, MeshError> {
    s.parse().map_err(|_| parse_err(line, format!("invalid {what} `{s}`")))
}

fn parse_row<T: std::str::FromStr + Copy + Default, const N: usize>(
    text: &str,
    line: usize,
    what: &str,
) -> Result<[T; N], MeshError> {
    let mut out = [T::default(); N];
    let mut fields = text.split_whitespace();
    for slot in out.iter_mut() {
        let field = fields
            .next()
            .ok_or_else(|| parse_err(line, format!("{what} line needs {N} fields")))?;
        *slot = parse_field(field, line, what)?;
    }
    if fields.next().is_some() {
        return Err(parse_err(line, format!("{what} line has more than {N} fields")));
    }
    Ok(out)
}
