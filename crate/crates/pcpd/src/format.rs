//! Binary tensor files and CSV factor matrices.
//!
//! Tensor file layout, all integers little-endian:
//!
//! ```text
//! offset  size      field
//! 0       4         magic "TNSR"
//! 4       4         version, u32 = 1
//! 8       4         ndims, u32
//! 12      4         reserved, zero (keeps the dims 8-byte aligned)
//! 16      8·ndims   dims, u64 each
//! …       8·Π dims  values, f64, row-major (last index fastest)
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use pcpd_core::nalgebra::DMatrix;
use pcpd_core::DenseTensor;

/// File signature.
pub const MAGIC: [u8; 4] = *b"TNSR";
/// Only supported version.
pub const VERSION: u32 = 1;
/// Bytes before the dims array.
pub const FIXED_HEADER_LEN: usize = 16;

/// Failures reading or writing the on-disk formats.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    /// Underlying I/O failure.
    #[error("i/o error")]
    Io(#[from] io::Error),
    /// First four bytes are not `TNSR`.
    #[error("not a tensor file: magic {0:02x?}, expected \"TNSR\"")]
    BadMagic([u8; 4]),
    /// Unknown format version.
    #[error("unsupported tensor file version {0}")]
    Version(u32),
    /// Nonzero reserved header word.
    #[error("reserved header word is {0:#x}, expected 0")]
    Reserved(u32),
    /// Fewer bytes than the header promises.
    #[error("truncated tensor file: need {needed} bytes, have {have}")]
    Truncated {
        /// Bytes required by the header.
        needed: usize,
        /// Bytes present.
        have: usize,
    },
    /// Bytes left after the payload.
    #[error("{0} unexpected bytes after the payload")]
    Trailing(usize),
    /// Dims whose product does not fit in memory addressing, or a zero dim.
    #[error("invalid dims {0:?}")]
    Dims(Vec<u64>),
    /// Malformed CSV content.
    #[error("csv: {0}")]
    Csv(String),
    /// Report serialization failure.
    #[error("cannot serialize report")]
    Toml(#[from] toml::ser::Error),
    /// The decoded values do not form a valid tensor.
    #[error(transparent)]
    Tensor(#[from] pcpd_core::Error),
}

/// Serializes a tensor into the file layout.
pub fn encode_tensor(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(FIXED_HEADER_LEN + 8 * (t.ndims() + t.len()));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(t.ndims() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for &d in t.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in t.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

/// Parses the file layout, rejecting anything malformed.
pub fn decode_tensor(bytes: &[u8]) -> Result<DenseTensor, FormatError> {
    let truncated = |needed| FormatError::Truncated {
        needed,
        have: bytes.len(),
    };
    if bytes.len() < FIXED_HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(FormatError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(truncated(FIXED_HEADER_LEN));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(FormatError::Version(version));
    }
    let ndims = u32_at(bytes, 8) as usize;
    let reserved = u32_at(bytes, 12);
    if reserved != 0 {
        return Err(FormatError::Reserved(reserved));
    }
    let dims_end = ndims
        .checked_mul(8)
        .and_then(|n| n.checked_add(FIXED_HEADER_LEN))
        .ok_or_else(|| FormatError::Dims(vec![]))?;
    if bytes.len() < dims_end {
        return Err(truncated(dims_end));
    }
    let raw: Vec<u64> = (0..ndims).map(|i| u64_at(bytes, FIXED_HEADER_LEN + 8 * i)).collect();
    let len = raw
        .iter()
        .try_fold(1usize, |acc, &d| {
            let d = usize::try_from(d).ok().filter(|&d| d > 0)?;
            acc.checked_mul(d)
        })
        .filter(|_| ndims > 0)
        .ok_or_else(|| FormatError::Dims(raw.clone()))?;
    let needed = len
        .checked_mul(8)
        .and_then(|n| n.checked_add(dims_end))
        .ok_or_else(|| FormatError::Dims(raw.clone()))?;
    if bytes.len() < needed {
        return Err(truncated(needed));
    }
    if bytes.len() > needed {
        return Err(FormatError::Trailing(bytes.len() - needed));
    }
    let values = bytes[dims_end..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let dims = raw.into_iter().map(|d| d as usize).collect();
    Ok(DenseTensor::new(dims, values)?)
}

/// Writes `t` to `path`.
pub fn write_tensor(path: &Path, t: &DenseTensor) -> Result<(), FormatError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_tensor(t))?;
    f.sync_all()?;
    Ok(())
}

/// Reads a tensor file.
pub fn read_tensor(path: &Path) -> Result<DenseTensor, FormatError> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_tensor(&bytes)
}

fn csv_err(e: csv::Error) -> FormatError {
    FormatError::Csv(e.to_string())
}

/// Writes a matrix as headerless CSV, one row per line. Values use the
/// shortest text that parses back to the same `f64`.
pub fn write_matrix_csv<W: Write>(w: W, m: &DMatrix<f64>) -> Result<(), FormatError> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for r in 0..m.nrows() {
        out.write_record(m.row(r).iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a headerless CSV matrix.
pub fn read_matrix_csv<R: Read>(r: R) -> Result<DMatrix<f64>, FormatError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| FormatError::Csv(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}

/// Writes one `factor_<n>.csv` per mode into `dir`.
pub fn write_factors(dir: &Path, factors: &[DMatrix<f64>]) -> Result<(), FormatError> {
    for (n, m) in factors.iter().enumerate() {
        write_matrix_csv(fs::File::create(dir.join(format!("factor_{n}.csv")))?, m)?;
    }
    Ok(())
}
