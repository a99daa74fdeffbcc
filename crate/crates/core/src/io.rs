//! File formats: binary PGM images, raw `VELO` fields and `det F` colormaps.
//!
//! Raw layout: a 32-byte header (`b"VELO"`, version, `n₁`, `n₂`, component
//! count as little-endian `u32`, then 12 zero bytes) followed by the
//! components one after another, each row-major little-endian `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid2D, GridError};

pub const RAW_MAGIC: &[u8; 4] = b"VELO";
pub const RAW_VERSION: u32 = 1;
const RAW_HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("image dimensions {0}x{1} do not form a valid grid: {2}")]
    Dimension(usize, usize, GridError),
    #[error("truncated data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("bad magic {0:?}, expected \"VELO\"")]
    BadMagic([u8; 4]),
    #[error("unsupported raw version {0}")]
    UnsupportedVersion(u32),
    #[error("raw file holds {found} components, expected {expected}")]
    ComponentMismatch { expected: u32, found: u32 },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

/// Parses `P5` header tokens, skipping `#` comments; returns them and the
/// offset of the first data byte.
fn pnm_header(bytes: &[u8], magic: &str) -> Result<([usize; 3], usize), IoError> {
    let mut pos = 0;
    let mut tokens: Vec<String> = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(IoError::MalformedHeader("unexpected end of header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if tokens[0] != magic {
        return Err(IoError::MalformedHeader(format!("expected {magic}, found {:?}", tokens[0])));
    }
    // exactly one whitespace byte separates the header from the data
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(IoError::MalformedHeader("missing separator after maxval".into()));
    }
    let mut nums = [0usize; 3];
    for (n, t) in nums.iter_mut().zip(&tokens[1..]) {
        *n = t
            .parse()
            .map_err(|_| IoError::MalformedHeader(format!("not a positive integer: {t:?}")))?;
    }
    if nums[2] == 0 || nums[2] > 65535 {
        return Err(IoError::MalformedHeader(format!("maxval {} out of range", nums[2])));
    }
    Ok((nums, pos + 1))
}

/// Reads a binary (`P5`) 8- or 16-bit PGM, scaled to `[0, 1]`. Image rows map
/// to axis 0.
pub fn read_pgm(path: &Path) -> Result<ScalarField, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let ([width, height, maxval], start) = pnm_header(&bytes, "P5")?;
    let grid = Grid2D::new(height, width).map_err(|e| IoError::Dimension(width, height, e))?;
    let depth = if maxval > 255 { 2 } else { 1 };
    let expected = width * height * depth;
    let data = &bytes[start..];
    if data.len() < expected {
        return Err(IoError::Truncated {
            expected,
            found: data.len(),
        });
    }
    let scale = 1.0 / maxval as f64;
    let values = if depth == 1 {
        data[..expected].iter().map(|&b| b as f64 * scale).collect()
    } else {
        data[..expected]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    };
    Ok(ScalarField::from_vec(&grid, values).expect("length checked"))
}

/// Writes an 8-bit PGM; values are clipped to `[0, 1]` and rounded.
pub fn write_pgm(f: &ScalarField, path: &Path) -> Result<(), IoError> {
    write_pgm_with_maxval(f, path, 255)
}

/// Writes a PGM with the given `maxval` (16-bit samples above 255).
pub fn write_pgm_with_maxval(f: &ScalarField, path: &Path, maxval: u16) -> Result<(), IoError> {
    if maxval == 0 {
        return Err(IoError::MalformedHeader("maxval must be positive".into()));
    }
    let [n1, n2] = f.grid().n();
    let mut out = format!("P5\n{n2} {n1}\n{maxval}\n").into_bytes();
    let m = maxval as f64;
    for &v in f.values() {
        let q = (v.clamp(0.0, 1.0) * m).round() as u16;
        if maxval > 255 {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    write_file(path, &out)
}

/// Field stored in a raw file.
#[derive(Debug, Clone, PartialEq)]
pub enum RawField {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl RawField {
    fn components(&self) -> Vec<&ScalarField> {
        match self {
            RawField::Scalar(s) => vec![s],
            RawField::Vector(v) => v.comps().iter().collect(),
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField, IoError> {
        match self {
            RawField::Scalar(s) => Ok(s),
            RawField::Vector(_) => Err(IoError::ComponentMismatch { expected: 1, found: 2 }),
        }
    }

    pub fn into_vector(self) -> Result<VectorField, IoError> {
        match self {
            RawField::Vector(v) => Ok(v),
            RawField::Scalar(_) => Err(IoError::ComponentMismatch { expected: 2, found: 1 }),
        }
    }
}

/// Serializes a field in the raw format.
pub fn raw_bytes(field: &RawField) -> Vec<u8> {
    let comps = field.components();
    let [n1, n2] = comps[0].grid().n();
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + 8 * n1 * n2 * comps.len());
    out.extend_from_slice(RAW_MAGIC);
    for x in [RAW_VERSION, n1 as u32, n2 as u32, comps.len() as u32] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&[0u8; 12]);
    for c in comps {
        for v in c.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_raw_field(field: &RawField, path: &Path) -> Result<(), IoError> {
    write_file(path, &raw_bytes(field))
}

pub fn write_raw_scalar(f: &ScalarField, path: &Path) -> Result<(), IoError> {
    write_raw_field(&RawField::Scalar(f.clone()), path)
}

pub fn write_raw_vector(v: &VectorField, path: &Path) -> Result<(), IoError> {
    write_raw_field(&RawField::Vector(v.clone()), path)
}

/// Parses raw-format bytes.
pub fn parse_raw(bytes: &[u8]) -> Result<RawField, IoError> {
    if bytes.len() < RAW_HEADER_LEN {
        return Err(IoError::Truncated {
            expected: RAW_HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if &magic != RAW_MAGIC {
        return Err(IoError::BadMagic(magic));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
    let (version, n1, n2, comps) = (word(0), word(1) as usize, word(2) as usize, word(3));
    if version != RAW_VERSION {
        return Err(IoError::UnsupportedVersion(version));
    }
    if comps != 1 && comps != 2 {
        return Err(IoError::MalformedHeader(format!("component count {comps}")));
    }
    let grid = Grid2D::new(n1, n2).map_err(|e| IoError::Dimension(n2, n1, e))?;
    let len = grid.len();
    let expected = RAW_HEADER_LEN + 8 * len * comps as usize;
    if bytes.len() != expected {
        return Err(IoError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    let mut fields = bytes[RAW_HEADER_LEN..].chunks_exact(8 * len).map(|chunk| {
        let vals = chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        ScalarField::from_vec(&grid, vals).expect("length checked")
    });
    let first = fields.next().expect("at least one component");
    Ok(match fields.next() {
        None => RawField::Scalar(first),
        Some(second) => RawField::Vector(VectorField::new(first, second)),
    })
}

pub fn read_raw_field(path: &Path) -> Result<RawField, IoError> {
    parse_raw(&fs::read(path).map_err(io_err(path))?)
}

pub const ORANGE: [u8; 3] = [255, 165, 0];

/// Colormap for `det F`: black at `lo`, orange at 1, white at `hi`,
/// piecewise linear and clipped outside the window.
pub fn detf_color(d: f64, window: (f64, f64)) -> [u8; 3] {
    let (lo, hi) = window;
    let lerp = |a: u8, b: u8, s: f64| (a as f64 + (b as f64 - a as f64) * s).round() as u8;
    if d.is_nan() || d <= lo {
        [0, 0, 0]
    } else if d < 1.0 {
        let s = (d - lo) / (1.0 - lo);
        [lerp(0, ORANGE[0], s), lerp(0, ORANGE[1], s), lerp(0, ORANGE[2], s)]
    } else if d < hi {
        let s = (d - 1.0) / (hi - 1.0);
        [lerp(ORANGE[0], 255, s), lerp(ORANGE[1], 255, s), lerp(ORANGE[2], 255, s)]
    } else {
        [255, 255, 255]
    }
}

pub const DEFAULT_DETF_WINDOW: (f64, f64) = (0.0, 2.0);

/// Writes `det F` as a binary `P6` PPM using [`detf_color`].
pub fn write_detf_colormap(det: &ScalarField, window: (f64, f64), path: &Path) -> Result<(), IoError> {
    let (lo, hi) = window;
    if !(lo < 1.0 && 1.0 < hi) {
        return Err(IoError::MalformedHeader(format!("colormap window ({lo}, {hi}) must contain 1")));
    }
    let [n1, n2] = det.grid().n();
    let mut out = format!("P6\n{n2} {n1}\n255\n").into_bytes();
    for &d in det.values() {
        out.extend_from_slice(&detf_color(d, window));
    }
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("stokesreg-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn pgm_round_trip() {
        let grid = Grid2D::new(8, 12).unwrap();
        let f = ScalarField::from_fn(&grid, |x, y| 0.5 + 0.5 * (x + 2.0 * y).sin());
        for (maxval, name) in [(255u16, "a.pgm"), (65535, "b.pgm")] {
            let p = tmp(name);
            write_pgm_with_maxval(&f, &p, maxval).unwrap();
            let back = read_pgm(&p).unwrap();
            assert_eq!(back.grid().n(), [8, 12]);
            assert!((&back - &f).max_abs() <= 0.5 / maxval as f64 + 1e-15);
        }
    }

    #[test]
    fn pgm_values_and_errors() {
        let p = tmp("c.pgm");
        let mut bytes = b"P5\n# comment\n4 4\n255\n".to_vec();
        bytes.extend((0..16).map(|i| if i % 2 == 0 { 255u8 } else { 0 }));
        fs::write(&p, &bytes).unwrap();
        let f = read_pgm(&p).unwrap();
        assert_eq!(f.values()[0], 1.0);
        assert_eq!(f.values()[1], 0.0);
        let odd = tmp("odd.pgm");
        let mut bytes = b"P5 5 4 255\n".to_vec();
        bytes.extend([0u8; 20]);
        fs::write(&odd, &bytes).unwrap();
        assert!(matches!(read_pgm(&odd), Err(IoError::Dimension(5, 4, _))));
        let bad = tmp("bad.pgm");
        fs::write(&bad, b"P2 4 4 255\n").unwrap();
        assert!(matches!(read_pgm(&bad), Err(IoError::MalformedHeader(_))));
        let short = tmp("short.pgm");
        fs::write(&short, b"P5 4 4 255\n\x01\x02").unwrap();
        assert!(matches!(read_pgm(&short), Err(IoError::Truncated { .. })));
        assert!(matches!(read_pgm(&tmp("missing.pgm")), Err(IoError::Io { .. })));
    }

    #[test]
    fn raw_round_trip_and_header() {
        let grid = Grid2D::square(64).unwrap();
        let s = ScalarField::from_fn(&grid, |x, y| (x * y).sin() / 3.0);
        let bytes = raw_bytes(&RawField::Scalar(s.clone()));
        assert_eq!(&bytes[..4], b"VELO");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 64);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 64);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 1);
        assert!(bytes[20..32].iter().all(|&b| b == 0));
        let back = parse_raw(&bytes).unwrap().into_scalar().unwrap();
        assert!(back.values().iter().zip(s.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        let v = VectorField::new(s.clone(), s.map(|x| -x));
        let p = tmp("v.raw");
        write_raw_vector(&v, &p).unwrap();
        assert_eq!(fs::read(&p).unwrap()[16], 2);
        assert_eq!(read_raw_field(&p).unwrap(), RawField::Vector(v));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(parse_raw(&bad), Err(IoError::BadMagic(_))));
        let mut bad = bytes;
        bad[4] = 2;
        assert!(matches!(parse_raw(&bad), Err(IoError::UnsupportedVersion(2))));
    }

    #[test]
    fn colormap() {
        let w = DEFAULT_DETF_WINDOW;
        assert_eq!(detf_color(1.0, w), ORANGE);
        assert_eq!(detf_color(0.0, w), [0, 0, 0]);
        assert_eq!(detf_color(-3.0, w), [0, 0, 0]);
        assert_eq!(detf_color(2.5, w), [255, 255, 255]);
        assert_eq!(detf_color(0.75, (0.5, 1.5)), [128, 83, 0]);
        let grid = Grid2D::square(4).unwrap();
        let p = tmp("d.ppm");
        write_detf_colormap(&ScalarField::constant(&grid, 1.0), w, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        let data = &bytes[bytes.len() - 48..];
        assert!(data.chunks(3).all(|c| c == ORANGE));
        assert!(bytes.starts_with(b"P6\n4 4\n255\n"));
        assert!(write_detf_colormap(&ScalarField::constant(&grid, 1.0), (1.0, 2.0), &p).is_err());
    }
}
