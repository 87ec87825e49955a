//! Binary tensor file format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   4 bytes  "SSTF"
//! version u16      1
//! dtype   u16      1 = 32-bit float
//! ndim    u32      3 (channels, height, width)
//! dims    ndim x u64
//! payload ndim-product x f32, row-major (channel-major, rows within channel)
//! ```
//!
//! Write followed by read is bit-exact on the payload: samples are moved as
//! raw IEEE-754 bits, never reformatted.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{FeatureMap, Planar};

const MAGIC: [u8; 4] = *b"SSTF";
const VERSION: u16 = 1;
const DTYPE_F32: u16 = 1;
const RANK: u32 = 3;

/// Writes a tensor in the format above.
pub fn write_tensor(t: &FeatureMap, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(&MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&DTYPE_F32.to_le_bytes()).map_err(io_err)?;
    w.write_all(&RANK.to_le_bytes()).map_err(io_err)?;
    for dim in [t.channels(), t.height(), t.width()] {
        w.write_all(&(dim as u64).to_le_bytes()).map_err(io_err)?;
    }
    for &v in t.samples() {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads a tensor written by [`write_tensor`], validating the whole header
/// before touching the payload.
pub fn read_tensor(path: &Path) -> Result<FeatureMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    read_exact_or(&mut r, &mut magic, path, || Error::BadMagic {
        path: path.to_path_buf(),
    })?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
        });
    }

    let version = read_u16(&mut r, path)?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            got: version,
            expected: VERSION,
        });
    }
    let dtype = read_u16(&mut r, path)?;
    if dtype != DTYPE_F32 {
        return Err(Error::UnsupportedDtype {
            path: path.to_path_buf(),
            got: dtype,
        });
    }
    let ndim = read_u32(&mut r, path)?;
    if ndim != RANK {
        return Err(Error::RankMismatch {
            path: path.to_path_buf(),
            got: ndim,
            expected: RANK,
        });
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let raw = read_u64(&mut r, path)?;
        *d = usize::try_from(raw).map_err(|_| Error::DimensionOverflow {
            path: path.to_path_buf(),
        })?;
    }
    let expected = dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .ok_or(Error::DimensionOverflow {
            path: path.to_path_buf(),
        })?;

    let mut data = Vec::with_capacity(expected);
    let mut buf = [0u8; 4];
    for got in 0..expected {
        match read_exact_opt(&mut r, &mut buf, path)? {
            true => data.push(f32::from_le_bytes(buf)),
            false => {
                return Err(Error::TruncatedPayload {
                    path: path.to_path_buf(),
                    expected: expected as u64,
                    got: got as u64,
                })
            }
        }
    }
    let mut trailing = 0u64;
    let mut sink = [0u8; 256];
    loop {
        let n = r.read(&mut sink).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        trailing += n as u64;
    }
    if trailing > 0 {
        return Err(Error::TrailingBytes {
            path: path.to_path_buf(),
            extra: trailing,
        });
    }
    FeatureMap::new(dims[0], dims[1], dims[2], data)
}

fn read_exact_or(
    r: &mut impl Read,
    buf: &mut [u8],
    path: &Path,
    on_eof: impl Fn() -> Error,
) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            on_eof()
        } else {
            Error::io(path, e)
        }
    })
}

/// Fills `buf` completely, or returns Ok(false) on clean EOF at a 4-byte
/// boundary. A partial read followed by EOF is also reported as Ok(false);
/// the caller counts whole samples either way.
fn read_exact_opt(r: &mut impl Read, buf: &mut [u8; 4], path: &Path) -> Result<bool> {
    match r.read_exact(buf) {
        Ok(()) => Ok(true),
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Ok(false),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn read_u16(r: &mut impl Read, path: &Path) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    Ok(u64::from_le_bytes(b))
}
