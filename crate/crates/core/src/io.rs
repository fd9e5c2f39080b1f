//! File formats: 8-bit PGM images and masks, CFF1 field files, JSON reports.
//!
//! CFF1 layout (all integers little-endian):
//!
//! ```text
//! offset 0  magic  b"CFF1"
//!        4  ndim   u8, 2 or 3
//!        5  nchan  u8, 1 (scalar) or ndim (vector)
//!        6  dims   ndim x u32 (height, width[, depth])
//!        .. payload product(dims) * nchan x f32, row-major, channels interleaved
//! ```

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{BinaryMask, GridShape, ScalarField, VectorField};

pub const FIELD_MAGIC: [u8; 4] = *b"CFF1";

/// Masks read from PGM are set where the pixel value is at least this.
pub const MASK_LEVEL: f64 = 128.0;

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Option<&'a [u8]> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let tok = self
            .next()
            .ok_or_else(|| Error::PgmHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                Error::PgmHeader(format!("bad {what} {:?}", String::from_utf8_lossy(tok)))
            })
    }
}

/// Parses a P2 or P5 PGM. Values are rescaled to `[0, 255]` when maxval < 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<ScalarField> {
    let mut tok = Tokens { bytes, pos: 0 };
    let ascii = match tok.next() {
        Some(b"P2") => true,
        Some(b"P5") => false,
        other => {
            return Err(Error::PgmHeader(format!(
                "unsupported magic {:?}",
                other.map(String::from_utf8_lossy)
            )))
        }
    };
    let width = tok.number("width")? as usize;
    let height = tok.number("height")? as usize;
    let maxval = tok.number("maxval")?;
    if maxval > 255 {
        return Err(Error::PgmMaxval(maxval));
    }
    if maxval == 0 {
        return Err(Error::PgmHeader("maxval must be positive".into()));
    }
    let shape = GridShape::new(&[height, width])
        .map_err(|_| Error::PgmHeader(format!("bad size {width}x{height}")))?;
    let n = shape.len();
    let scale = 255.0 / f64::from(maxval);

    let raw: Vec<u32> = if ascii {
        let mut vals = Vec::with_capacity(n);
        while vals.len() < n {
            let Some(t) = tok.next() else { break };
            let v: u32 = std::str::from_utf8(t)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::PgmHeader(format!("bad sample at value {}", vals.len())))?;
            if v > maxval {
                return Err(Error::PgmHeader(format!(
                    "sample {v} exceeds maxval {maxval}"
                )));
            }
            vals.push(v);
        }
        if vals.len() < n {
            return Err(Error::Truncated {
                expected: n,
                actual: vals.len(),
                unit: "samples",
            });
        }
        vals
    } else {
        // exactly one whitespace byte separates maxval from the raster
        let start = tok.pos + 1;
        let available = bytes.len().saturating_sub(start);
        if available < n {
            return Err(Error::Truncated {
                expected: n,
                actual: available,
                unit: "bytes",
            });
        }
        let data = &bytes[start..start + n];
        if let Some(&v) = data.iter().find(|&&v| u32::from(v) > maxval) {
            return Err(Error::PgmHeader(format!(
                "sample {v} exceeds maxval {maxval}"
            )));
        }
        data.iter().map(|&v| u32::from(v)).collect()
    };
    ScalarField::new(
        shape,
        raw.into_iter().map(|v| f64::from(v) * scale).collect(),
    )
}

fn to_byte(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// The image as it reads back after [`encode_pgm`]: rounded and clamped to bytes.
pub fn quantize_8bit(image: &ScalarField) -> ScalarField {
    image
        .map(|v| f64::from(to_byte(v)))
        .expect("byte values are finite")
}

/// Binary P5, maxval 255. Values are rounded and clamped to `[0, 255]`.
pub fn encode_pgm(image: &ScalarField) -> Result<Vec<u8>> {
    image.shape().ensure_ndim(2)?;
    let mut out = format!(
        "P5\n{} {}\n255\n",
        image.shape().width(),
        image.shape().height()
    )
    .into_bytes();
    out.extend(image.values().iter().map(|&v| to_byte(v)));
    Ok(out)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<ScalarField> {
    decode_pgm(&read_bytes(path.as_ref())?)
}

pub fn write_pgm(path: impl AsRef<Path>, image: &ScalarField) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pgm(image)?)
}

pub fn mask_from_image(image: &ScalarField) -> BinaryMask {
    crate::fields::threshold(image, MASK_LEVEL)
}

pub fn mask_to_image(mask: &BinaryMask) -> ScalarField {
    mask.to_field().map(|v| v * 255.0).expect("finite")
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    Ok(mask_from_image(&read_pgm(path)?))
}

/// Writes `{0, 255}`.
pub fn write_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    write_pgm(path, &mask_to_image(mask))
}

/// A decoded CFF1 file.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldData {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl FieldData {
    pub fn shape(&self) -> &GridShape {
        match self {
            FieldData::Scalar(f) => f.shape(),
            FieldData::Vector(f) => f.shape(),
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        match self {
            FieldData::Scalar(f) => Ok(f),
            FieldData::Vector(f) => Err(Error::FieldHeader(format!(
                "expected a scalar field, found {} channels",
                f.channels()
            ))),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        match self {
            FieldData::Vector(f) => Ok(f),
            FieldData::Scalar(_) => Err(Error::FieldHeader(
                "expected a vector field, found 1 channel".into(),
            )),
        }
    }
}

fn encode_raw(shape: &GridShape, nchan: usize, values: &[f64]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(6 + 4 * shape.ndim() + 4 * values.len());
    out.extend_from_slice(&FIELD_MAGIC);
    out.push(shape.ndim() as u8);
    out.push(nchan as u8);
    for &d in shape.dims() {
        let d = u32::try_from(d)
            .map_err(|_| Error::FieldHeader(format!("extent {d} does not fit in u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for (i, &v) in values.iter().enumerate() {
        let x = v as f32;
        if !x.is_finite() {
            return Err(Error::NonFiniteValue { index: i });
        }
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

/// The field as it reads back from a CFF1 file.
pub fn quantize_f32(field: &ScalarField) -> Result<ScalarField> {
    decode_field(&encode_scalar_field(field)?)?.into_scalar()
}

/// The vector field as it reads back from a CFF1 file.
pub fn quantize_f32_vector(field: &VectorField) -> Result<VectorField> {
    decode_field(&encode_vector_field(field)?)?.into_vector()
}

pub fn encode_scalar_field(field: &ScalarField) -> Result<Vec<u8>> {
    encode_raw(field.shape(), 1, field.values())
}

pub fn encode_vector_field(field: &VectorField) -> Result<Vec<u8>> {
    encode_raw(field.shape(), field.channels(), field.values())
}

pub fn decode_field(bytes: &[u8]) -> Result<FieldData> {
    if bytes.len() < 6 {
        return Err(Error::Truncated {
            expected: 6,
            actual: bytes.len(),
            unit: "header bytes",
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != FIELD_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let ndim = bytes[4] as usize;
    let nchan = bytes[5] as usize;
    if !(ndim == 2 || ndim == 3) {
        return Err(Error::FieldHeader(format!("ndim {ndim} is not 2 or 3")));
    }
    if !(nchan == 1 || nchan == ndim) {
        return Err(Error::FieldHeader(format!(
            "{nchan} channels on a {ndim}D grid"
        )));
    }
    let header = 6 + 4 * ndim;
    if bytes.len() < header {
        return Err(Error::Truncated {
            expected: header,
            actual: bytes.len(),
            unit: "header bytes",
        });
    }
    let dims: Vec<usize> = bytes[6..header]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")) as usize)
        .collect();
    let shape =
        GridShape::new(&dims).map_err(|_| Error::FieldHeader(format!("bad extents {dims:?}")))?;
    let expected = shape.len() * nchan * 4;
    let payload = &bytes[header..];
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: payload.len(),
            unit: "payload bytes",
        });
    }
    if payload.len() > expected {
        return Err(Error::FieldHeader(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
        .collect();
    Ok(if nchan == 1 {
        FieldData::Scalar(ScalarField::new(shape, values)?)
    } else {
        FieldData::Vector(VectorField::new(shape, values)?)
    })
}

pub fn read_field(path: impl AsRef<Path>) -> Result<FieldData> {
    decode_field(&read_bytes(path.as_ref())?)
}

pub fn read_scalar_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    read_field(path)?.into_scalar()
}

pub fn read_vector_field(path: impl AsRef<Path>) -> Result<VectorField> {
    read_field(path)?.into_vector()
}

pub fn write_scalar_field(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    write_bytes(path.as_ref(), &encode_scalar_field(field)?)
}

pub fn write_vector_field(path: impl AsRef<Path>, field: &VectorField) -> Result<()> {
    write_bytes(path.as_ref(), &encode_vector_field(field)?)
}

/// Pretty-printed JSON. Floats use the shortest representation that
/// parses back to the identical `f64`.
pub fn report_json<T: Serialize + ?Sized>(report: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn write_report<T: Serialize + ?Sized>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut text = report_json(report)?;
    text.push('\n');
    write_bytes(path.as_ref(), text.as_bytes())
}
