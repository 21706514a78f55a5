//! Binary weight persistence. Layout: magic "SHDW", u32 LE version (= 1),
//! u32 LE matrix count, then per matrix u64 LE rows, u64 LE cols, and
//! row-major f64 LE entries. Bias vectors are stored as 1 x n matrices.

use std::fs;
use std::path::Path;

use shadownet_core::linalg::Matrix;
use shadownet_core::Error;

use crate::error::Result;

pub const WEIGHTS_MAGIC: [u8; 4] = *b"SHDW";
pub const WEIGHTS_VERSION: u32 = 1;

/// Exact file size for the given matrix shapes.
pub fn file_size(shapes: &[(usize, usize)]) -> u64 {
    12 + shapes
        .iter()
        .map(|&(r, c)| 16 + 8 * (r as u64) * (c as u64))
        .sum::<u64>()
}

pub fn save_weights(matrices: &[Matrix], path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(
        file_size(
            &matrices
                .iter()
                .map(|m| (m.rows(), m.cols()))
                .collect::<Vec<_>>(),
        ) as usize,
    );
    bytes.extend_from_slice(&WEIGHTS_MAGIC);
    bytes.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(matrices.len() as u32).to_le_bytes());
    for m in matrices {
        bytes.extend_from_slice(&(m.rows() as u64).to_le_bytes());
        bytes.extend_from_slice(&(m.cols() as u64).to_le_bytes());
        for &v in m.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.offset + n > self.bytes.len() {
            return Err(Error::Format {
                offset: self.bytes.len() as u64,
                reason: format!("truncated while reading {what}"),
            }
            .into());
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn u32_le(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64_le(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn load_weights(path: &Path) -> Result<Vec<Matrix>> {
    let bytes = fs::read(path)?;
    let mut r = Reader {
        bytes: &bytes,
        offset: 0,
    };
    let magic = r.take(4, "magic")?;
    if magic != WEIGHTS_MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: format!("bad magic {magic:?}, expected \"SHDW\""),
        }
        .into());
    }
    let version = r.u32_le("version")?;
    if version != WEIGHTS_VERSION {
        return Err(Error::Format {
            offset: 4,
            reason: format!("unsupported version {version}"),
        }
        .into());
    }
    let count = r.u32_le("matrix count")?;
    let mut matrices = Vec::with_capacity(count as usize);
    for i in 0..count {
        let rows = r.u64_le("rows")? as usize;
        let cols = r.u64_le("cols")? as usize;
        if rows == 0 || cols == 0 {
            return Err(Error::Format {
                offset: r.offset as u64 - 16,
                reason: format!("matrix {i} has empty shape {rows}x{cols}"),
            }
            .into());
        }
        let raw = r.take(8 * rows * cols, "matrix data")?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        matrices.push(Matrix::from_vec(rows, cols, data).map_err(|e| Error::Format {
            offset: r.offset as u64,
            reason: format!("matrix {i}: {e}"),
        })?);
    }
    if r.offset != bytes.len() {
        return Err(Error::Format {
            offset: r.offset as u64,
            reason: format!("{} trailing bytes", bytes.len() - r.offset),
        }
        .into());
    }
    Ok(matrices)
}
