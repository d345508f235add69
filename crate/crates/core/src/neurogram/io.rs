//! On-disk neurogram format.
//!
//! One line of UTF-8 JSON (terminated by `\n`) holding all metadata and
//! the dimensions, followed by `rows * cols` little-endian `f64` values in
//! row-major order. Nothing may follow the payload.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Neurogram, NeurogramKind, NeurogramMetadata};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::periphery::FiberTag;

pub const FORMAT_VERSION: &str = "neurogram/1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    fmt: String,
    rows: usize,
    cols: usize,
    cf_axis_hz: Vec<f64>,
    bin_width_s: f64,
    kind: NeurogramKind,
    fiber_type: FiberTag,
    metadata: NeurogramMetadata,
}

pub fn write_neurogram(n: &Neurogram, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    n.validate()?;
    let header = Header {
        fmt: FORMAT_VERSION.to_string(),
        rows: n.values.rows(),
        cols: n.values.cols(),
        cf_axis_hz: n.cf_axis_hz.clone(),
        bin_width_s: n.bin_width_s,
        kind: n.kind,
        fiber_type: n.fiber,
        metadata: n.metadata.clone(),
    };
    let mut bytes = serde_json::to_vec(&header).map_err(|e| Error::Internal(e.to_string()))?;
    bytes.push(b'\n');
    bytes.reserve(n.values.as_slice().len() * 8);
    for v in n.values.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_neurogram(path: impl AsRef<Path>) -> Result<Neurogram> {
    let path = path.as_ref();
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let bytes = std::fs::read(path).map_err(|e| malformed(e.to_string()))?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| malformed("missing header line".into()))?;
    let raw: serde_json::Value =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| malformed(e.to_string()))?;
    match raw.get("fmt").and_then(|v| v.as_str()) {
        Some(FORMAT_VERSION) => {}
        Some(other) => return Err(Error::UnknownFormat(other.to_string())),
        None => return Err(malformed("header has no \"fmt\" field".into())),
    }
    let header: Header = serde_json::from_value(raw).map_err(|e| malformed(e.to_string()))?;
    if header.cf_axis_hz.len() != header.rows {
        return Err(Error::ShapeMismatch(format!(
            "header declares {} rows but {} CFs",
            header.rows,
            header.cf_axis_hz.len()
        )));
    }
    let payload = &bytes[nl + 1..];
    let expected = header.rows * header.cols * 8;
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::ShapeMismatch(format!(
            "payload has {} bytes, header promises {expected}",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let n = Neurogram {
        values: Matrix::from_vec(header.rows, header.cols, data)?,
        cf_axis_hz: header.cf_axis_hz,
        bin_width_s: header.bin_width_s,
        kind: header.kind,
        fiber: header.fiber_type,
        metadata: header.metadata,
    };
    n.validate()?;
    Ok(n)
}

/// Plot-friendly export: a header line `cf_hz,<t0>,<t1>,...` (bin start
/// times in seconds), then one line per CF.
pub fn write_neurogram_csv(n: &Neurogram, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let io = |e| Error::io(path.display().to_string(), e);
    write!(out, "cf_hz").map_err(io)?;
    for j in 0..n.values.cols() {
        write!(out, ",{}", j as f64 * n.bin_width_s).map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    for (i, cf) in n.cf_axis_hz.iter().enumerate() {
        write!(out, "{cf}").map_err(io)?;
        for v in n.values.row(i) {
            write!(out, ",{v}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    std::fs::write(path, out).map_err(io)
}
