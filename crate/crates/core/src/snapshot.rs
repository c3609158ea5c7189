//! Field snapshot container: a self-describing text header followed by the
//! raw coefficient array.
//!
//! Layout (documented byte-exact in docs/formats.md):
//!   - header: UTF-8 lines `key = value`, first line `#benard-field v1`,
//!     terminated by a line containing only `---` followed by '\n'
//!   - payload: n little-endian IEEE 754 f64 values in (k, j, parity)
//!     row-major order (k outer, then j, then parity Cos before Sin)

use crate::basis::Basis;
use crate::bc::{BoundaryCondition, SpaceTag};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use std::io::{Read, Write};
use std::sync::Arc;

pub const SNAPSHOT_MAGIC: &str = "#benard-field v1";

fn space_name(tag: SpaceTag) -> &'static str {
    match tag {
        SpaceTag::B0 => "B0",
        SpaceTag::B1 => "B1",
        SpaceTag::B2 => "B2",
        SpaceTag::B3 => "B3",
    }
}

fn parse_space(s: &str) -> Result<SpaceTag> {
    Ok(match s {
        "B0" => SpaceTag::B0,
        "B1" => SpaceTag::B1,
        "B2" => SpaceTag::B2,
        "B3" => SpaceTag::B3,
        _ => return Err(Error::SnapshotFormat(format!("unknown space tag '{s}'"))),
    })
}

pub fn write_snapshot<W: Write>(w: &mut W, field: &SpectralField) -> Result<()> {
    let b = field.basis();
    writeln!(w, "{SNAPSHOT_MAGIC}")?;
    writeln!(w, "bc = {}", b.bc)?;
    writeln!(w, "space = {}", space_name(b.bc.space_tag))?;
    writeln!(w, "L = {:.17e}", b.period)?;
    writeln!(w, "R = {:.17e}", b.rayleigh)?;
    writeln!(w, "K = {}", b.k_max)?;
    writeln!(w, "J = {}", b.j_max)?;
    writeln!(w, "coeffs = {}", b.n_coeffs())?;
    writeln!(w, "order = k-major, then j, parity Cos before Sin")?;
    writeln!(w, "data = little-endian f64")?;
    writeln!(w, "---")?;
    for c in field.coeffs() {
        w.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<SpectralField> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let sep = b"\n---\n";
    let pos = bytes
        .windows(sep.len())
        .position(|w| w == sep)
        .ok_or_else(|| Error::SnapshotFormat("missing '---' header terminator".into()))?;
    let header = std::str::from_utf8(&bytes[..pos])
        .map_err(|_| Error::SnapshotFormat("header is not UTF-8".into()))?;
    let payload = &bytes[pos + sep.len()..];

    let mut lines = header.lines();
    let magic = lines.next().unwrap_or("");
    if magic.trim() != SNAPSHOT_MAGIC {
        return Err(Error::SnapshotFormat(format!(
            "bad magic line '{magic}' (expected '{SNAPSHOT_MAGIC}')"
        )));
    }
    let mut bc_tag = None;
    let mut space = None;
    let mut l = None;
    let mut r_num = None;
    let mut k_max = None;
    let mut j_max = None;
    let mut n_coeffs = None;
    for line in lines {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "bc" => bc_tag = Some(BoundaryCondition::parse(value)?.tag),
            "space" => space = Some(parse_space(value)?),
            "L" => l = Some(parse_f64(value)?),
            "R" => r_num = Some(parse_f64(value)?),
            "K" => k_max = Some(parse_usize(value)?),
            "J" => j_max = Some(parse_usize(value)?),
            "coeffs" => n_coeffs = Some(parse_usize(value)?),
            _ => {}
        }
    }
    let (Some(tag), Some(space), Some(l), Some(r_num), Some(k_max), Some(j_max), Some(n)) =
        (bc_tag, space, l, r_num, k_max, j_max, n_coeffs)
    else {
        return Err(Error::SnapshotFormat(
            "header is missing one of bc/space/L/R/K/J/coeffs".into(),
        ));
    };
    if payload.len() != 8 * n {
        return Err(Error::SnapshotFormat(format!(
            "payload holds {} bytes, expected {}",
            payload.len(),
            8 * n
        )));
    }
    let bc = BoundaryCondition::with_space(tag, space)?;
    let basis: Arc<Basis> = Basis::new(bc, l, r_num, k_max, j_max, None)?;
    if basis.n_coeffs() != n {
        return Err(Error::SnapshotFormat(format!(
            "coefficient count {} does not match truncation K = {k_max}, J = {j_max}",
            n
        )));
    }
    let coeffs: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    SpectralField::from_coeffs(basis, coeffs)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::SnapshotFormat(format!("bad float '{s}'")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| Error::SnapshotFormat(format!("bad integer '{s}'")))
}

pub fn save_snapshot(path: &std::path::Path, field: &SpectralField) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot(&mut f, field)
}

pub fn load_snapshot(path: &std::path::Path) -> Result<SpectralField> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_snapshot(&mut f)
}
