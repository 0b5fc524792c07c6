//! Matrix files and serde helpers.
//!
//! JSON: `{"rows": r, "cols": c, "data": [[re, im], ...]}` in row-major order.
//! Binary: magic `CVRBMAT1`, rows and cols as u64 LE, then interleaved
//! re/im f64 LE in row-major order.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 8] = b"CVRBMAT1";

#[derive(Serialize, Deserialize)]
struct MatrixRecord {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixRecord {
    fn from(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<MatrixRecord> for CMatrix {
    type Error = Error;

    fn try_from(r: MatrixRecord) -> Result<Self> {
        if r.data.len() != r.rows * r.cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {}x{} matrix",
                r.data.len(),
                r.rows,
                r.cols
            )));
        }
        Ok(CMatrix::from_fn(r.rows, r.cols, |i, j| {
            let [re, im] = r.data[i * r.cols + j];
            C64::new(re, im)
        }))
    }
}

/// `#[serde(with = "crate::io::cmatrix")]` for `CMatrix` fields.
pub mod cmatrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRecord::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let r = MatrixRecord::deserialize(d)?;
        CMatrix::try_from(r).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "crate::io::cmatrix_list")]` for `Vec<CMatrix>` fields.
pub mod cmatrix_list {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let records: Vec<MatrixRecord> = ms.iter().map(MatrixRecord::from).collect();
        records.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
        Vec::<MatrixRecord>::deserialize(d)?
            .into_iter()
            .map(|r| CMatrix::try_from(r).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string(&MatrixRecord::from(m)).expect("finite matrix serializes")
}

pub fn matrix_from_json(text: &str) -> Result<CMatrix> {
    let r: MatrixRecord = serde_json::from_str(text)?;
    CMatrix::try_from(r)
}

pub fn matrix_to_bytes(m: &CMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 16 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

pub fn matrix_from_bytes(bytes: &[u8]) -> Result<CMatrix> {
    if bytes.len() < 24 || &bytes[..8] != MAGIC {
        return Err(Error::Config("not a CVRBMAT1 matrix file".into()));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (word(8) as usize, word(16) as usize);
    let need = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add(24))
        .ok_or_else(|| Error::Config("matrix header overflows".into()))?;
    if bytes.len() != need {
        return Err(Error::ShapeMismatch(format!(
            "{} bytes for a {rows}x{cols} matrix",
            bytes.len()
        )));
    }
    let f = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes"));
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        let at = 24 + 16 * (i * cols + j);
        C64::new(f(at), f(at + 8))
    }))
}

/// Reads a matrix, choosing the format from the file contents.
pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        matrix_from_bytes(&bytes)
    } else {
        matrix_from_json(std::str::from_utf8(&bytes).map_err(|e| Error::Config(e.to_string()))?)
    }
}

/// Writes binary when the extension is `.bin`, JSON otherwise.
pub fn write_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    if path.extension().is_some_and(|e| e == "bin") {
        fs::write(path, matrix_to_bytes(m))?;
    } else {
        fs::write(path, matrix_to_json(m))?;
    }
    Ok(())
}
