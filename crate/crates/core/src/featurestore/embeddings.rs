//! Dense feature matrices and their on-disk binary form.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "GEVK"
//! 4       4     format version (u32)
//! 8       8     n_rows (u64)
//! 16      8     dims (u64)
//! 24      1     dtype code (0x01 = f32 LE)
//! 25      ...   row-id table: n_rows x (u32 byte length, UTF-8 bytes)
//! ...     ...   payload: n_rows * dims values, row-major
//! ```

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"GEVK";
pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 0x01;

const FIXED_HEADER_LEN: u64 = 4 + 4 + 8 + 8 + 1;

/// Row-major matrix of feature vectors, one row per image or prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n_rows: usize,
    dims: usize,
    values: Vec<f32>,
    row_ids: Vec<String>,
}

impl EmbeddingMatrix {
    pub fn new(dims: usize, values: Vec<f32>, row_ids: Vec<String>) -> Result<Self> {
        let n_rows = row_ids.len();
        if n_rows == 0 {
            return Err(Error::InvalidMatrix("n_rows must be at least 1".into()));
        }
        if dims == 0 {
            return Err(Error::InvalidMatrix("dims must be at least 1".into()));
        }
        if values.len() != n_rows * dims {
            return Err(Error::InvalidMatrix(format!(
                "{} values for {n_rows} rows x {dims} dims",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i / dims,
                col: i % dims,
            });
        }
        let mut seen = HashSet::with_capacity(n_rows);
        for id in &row_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidMatrix(format!("duplicate row id `{id}`")));
            }
        }
        Ok(Self {
            n_rows,
            dims,
            values,
            row_ids,
        })
    }

    /// Builds a matrix from `f64` rows, rounding to `f32` storage.
    pub fn from_rows<S: Into<String>>(rows: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let dims = rows.first().map(|(_, r)| r.len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * dims);
        let mut ids = Vec::with_capacity(rows.len());
        for (id, row) in rows {
            if row.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    got: row.len(),
                });
            }
            values.extend(row.iter().map(|&v| v as f32));
            ids.push(id.into());
        }
        Self::new(dims, values, ids)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| f64::from(v)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.row_ids
            .iter()
            .map(String::as_str)
            .zip(self.values.chunks_exact(self.dims))
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.row_ids.iter().position(|r| r == id)
    }
}

pub fn write_embeddings(matrix: &EmbeddingMatrix, destination: &Path) -> Result<()> {
    // Values are validated at construction; re-check in case of a future
    // mutable API.
    if let Some(i) = matrix.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: i / matrix.dims,
            col: i % matrix.dims,
        });
    }
    let file = File::create(destination).map_err(|e| Error::io(destination, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(destination, e);

    out.write_all(&MAGIC).map_err(io)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(io)?;
    out.write_all(&(matrix.n_rows as u64).to_le_bytes()).map_err(io)?;
    out.write_all(&(matrix.dims as u64).to_le_bytes()).map_err(io)?;
    out.write_all(&[DTYPE_F32]).map_err(io)?;
    for id in &matrix.row_ids {
        let len = u32::try_from(id.len())
            .map_err(|_| Error::InvalidMatrix(format!("row id too long ({} bytes)", id.len())))?;
        out.write_all(&len.to_le_bytes()).map_err(io)?;
        out.write_all(id.as_bytes()).map_err(io)?;
    }
    for v in &matrix.values {
        out.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_embeddings(source: &Path) -> Result<EmbeddingMatrix> {
    let io = |e| Error::io(source, e);
    let file_len = fs::metadata(source).map_err(io)?.len();
    let mut input = BufReader::new(File::open(source).map_err(io)?);

    let mut magic = [0u8; 4];
    read_header_field(&mut input, &mut magic, "magic", source)?;
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let mut u32_buf = [0u8; 4];
    read_header_field(&mut input, &mut u32_buf, "version", source)?;
    let version = u32::from_le_bytes(u32_buf);
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let mut u64_buf = [0u8; 8];
    read_header_field(&mut input, &mut u64_buf, "n_rows", source)?;
    let n_rows = u64::from_le_bytes(u64_buf);
    read_header_field(&mut input, &mut u64_buf, "dims", source)?;
    let dims = u64::from_le_bytes(u64_buf);
    let mut dtype = [0u8; 1];
    read_header_field(&mut input, &mut dtype, "dtype", source)?;
    if dtype[0] != DTYPE_F32 {
        return Err(Error::UnsupportedDtype(dtype[0]));
    }
    if n_rows == 0 || dims == 0 {
        return Err(Error::InvalidMatrix(format!(
            "header declares {n_rows} rows x {dims} dims"
        )));
    }

    // Each row id costs at least its 4-byte length prefix; reject absurd
    // row counts before allocating anything.
    let min_table = n_rows
        .checked_mul(4)
        .ok_or(Error::TruncatedHeader("row count overflows"))?;
    if FIXED_HEADER_LEN + min_table > file_len {
        return Err(Error::TruncatedHeader("row-id table"));
    }

    let mut row_ids = Vec::with_capacity(n_rows as usize);
    let mut consumed = FIXED_HEADER_LEN;
    for _ in 0..n_rows {
        read_header_field(&mut input, &mut u32_buf, "row-id length", source)?;
        let len = u64::from(u32::from_le_bytes(u32_buf));
        if consumed + 4 + len > file_len {
            return Err(Error::TruncatedHeader("row-id table"));
        }
        let mut bytes = vec![0u8; len as usize];
        read_header_field(&mut input, &mut bytes, "row id", source)?;
        let id = String::from_utf8(bytes).map_err(|_| Error::InvalidMatrix("row id is not valid UTF-8".into()))?;
        row_ids.push(id);
        consumed += 4 + len;
    }

    let expected = n_rows
        .checked_mul(dims)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::InvalidMatrix("rows x dims overflows".into()))?;
    let found = file_len - consumed;
    if found < expected {
        return Err(Error::TruncatedPayload { expected, found });
    }
    if found > expected {
        return Err(Error::SizeMismatch { expected, found });
    }

    let mut payload = vec![0u8; expected as usize];
    input.read_exact(&mut payload).map_err(io)?;
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    EmbeddingMatrix::new(dims as usize, values, row_ids)
}

fn read_header_field(input: &mut impl Read, buf: &mut [u8], field: &'static str, source: &Path) -> Result<()> {
    input.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::TruncatedHeader(field)
        } else {
            Error::io(source, e)
        }
    })
}
