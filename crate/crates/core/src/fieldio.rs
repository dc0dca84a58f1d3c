//! Field files: one JSON header line, then `count` little-endian `f64`.
//!
//! Values are in the order of the DOF space they belong to, which for a
//! full-box field is x-fastest and component-slowest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const MAGIC: &str = "bihfield";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub magic: String,
    /// Tensor rank of the field: 0 scalar, 1 vector, 2 matrix.
    pub rank: u32,
    pub dims: [usize; 3],
    pub h: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub rank: u32,
    pub dims: [usize; 3],
    pub h: f64,
    pub values: Vec<f64>,
}

pub fn write_field<W: Write>(mut w: W, f: &FieldFile) -> Result<()> {
    let header = FieldHeader { magic: MAGIC.into(), rank: f.rank, dims: f.dims, h: f.h, count: f.values.len() };
    let line = serde_json::to_string(&header).map_err(|e| LabError::HeaderMismatch(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    for v in &f.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field, checking the header against `expect_rank` when given.
pub fn read_field<R: Read>(r: R, expect_rank: Option<u32>) -> Result<FieldFile> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: FieldHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| LabError::HeaderMismatch(format!("unreadable header: {e}")))?;
    if header.magic != MAGIC {
        return Err(LabError::HeaderMismatch(format!("magic `{}`", header.magic)));
    }
    if let Some(rank) = expect_rank {
        if header.rank != rank {
            return Err(LabError::HeaderMismatch(format!("rank {} where {rank} was expected", header.rank)));
        }
    }
    let mut values = Vec::with_capacity(header.count);
    let mut buf = [0u8; 8];
    for _ in 0..header.count {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    if r.read(&mut buf)? != 0 {
        return Err(LabError::HeaderMismatch(format!("payload longer than {} values", header.count)));
    }
    Ok(FieldFile { rank: header.rank, dims: header.dims, h: header.h, values })
}

pub fn save_field(path: &Path, f: &FieldFile) -> Result<()> {
    write_field(BufWriter::new(File::create(path)?), f)
}

pub fn load_field(path: &Path, expect_rank: Option<u32>) -> Result<FieldFile> {
    read_field(File::open(path)?, expect_rank)
}
