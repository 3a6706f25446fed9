//! Binary phase-field snapshots.
//!
//! Layout: a 64-byte header — magic `ACMF`, format version, grid dimension,
//! grid resolution, interface width, simulation time, zero padding — followed
//! by the `n^d` node values in row-major order, everything little-endian.
//! Round-trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read as _, Write as _};
use std::path::Path;

use acmf_core::grid::{GridError, ScalarField, TorusGrid};
use thiserror::Error;

const MAGIC: [u8; 4] = *b"ACMF";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 64;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a snapshot file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported snapshot version {0} (expected {VERSION})")]
    BadVersion(u32),
    #[error("file holds {got} values but the header promises {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Writes `phi` at time `t` to `path`.
pub fn write_snapshot(path: &Path, phi: &ScalarField, t: f64) -> Result<(), SnapshotError> {
    let grid = phi.grid();
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(grid.d() as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(grid.n() as u32).to_le_bytes());
    header[16..24].copy_from_slice(&grid.h().to_le_bytes());
    header[24..32].copy_from_slice(&t.to_le_bytes());
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&header)?;
    let mut buf = Vec::with_capacity(phi.values().len() * 8);
    for &v in phi.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

/// Reads a snapshot back as the field and its recorded time.
pub fn read_snapshot(path: &Path) -> Result<(ScalarField, f64), SnapshotError> {
    let mut input = BufReader::new(File::open(path)?);
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if header[0..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let d = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let t = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let grid = TorusGrid::new(d, n)?;
    let expected = grid.num_nodes();
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != expected * 8 {
        return Err(SnapshotError::SizeMismatch {
            expected,
            got: body.len() / 8,
        });
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((ScalarField::from_values(grid, values)?, t))
}
