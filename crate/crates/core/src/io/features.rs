//! The binary frame-feature format.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DTRF"
//! 4       2     format version (currently 1)
//! 6       1     element dtype tag (0 = 32-bit float)
//! 7       1     reserved, written as 0
//! 8       4     frame count T
//! 12      4     feature width D
//! 16      4*T*D row-major f32 payload
//! ```
//!
//! Storage is always 32-bit; loading promotes to whatever scalar the caller
//! works in. Round trips are lossless at the stored precision.

use std::fs;
use std::path::Path;

use crate::error::{file_err, Error, Result};
use crate::numerics::{Scalar, Tensor};

pub const MAGIC: [u8; 4] = *b"DTRF";
pub const VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 0;
pub const HEADER_LEN: usize = 16;

/// Parsed and validated header of a feature file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureHeader {
    pub frames: u32,
    pub dim: u32,
}

impl FeatureHeader {
    /// Total file size the header promises.
    fn file_len(&self) -> u64 {
        HEADER_LEN as u64 + 4 * self.frames as u64 * self.dim as u64
    }
}

fn parse_header(bytes: &[u8]) -> Result<FeatureHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic {
            expected: MAGIC,
            found: magic,
        });
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = bytes[6];
    if dtype != DTYPE_F32 {
        return Err(Error::UnsupportedDtype(dtype));
    }
    let frames = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
    // 4*T*D must stay addressable; on 64-bit targets this can only trip for
    // absurd headers, which is exactly when we want the typed error.
    let elems = (frames as u64).checked_mul(dim as u64);
    if elems.and_then(|e| e.checked_mul(4)).map_or(true, |b| b > usize::MAX as u64 - HEADER_LEN as u64) {
        return Err(Error::SizeOverflow(frames as u64, dim as u64));
    }
    Ok(FeatureHeader { frames, dim })
}

fn parse<S: Scalar>(bytes: &[u8]) -> Result<Tensor<S>> {
    let header = parse_header(bytes)?;
    let expected = header.file_len();
    if (bytes.len() as u64) != expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let mut data = Vec::with_capacity(header.frames as usize * header.dim as usize);
    for chunk in bytes[HEADER_LEN..].chunks_exact(4) {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        data.push(S::from_f64(v as f64));
    }
    Ok(Tensor::from_vec(&[header.frames as usize, header.dim as usize], data))
}

fn encode<S: Scalar>(m: &Tensor<S>) -> Result<Vec<u8>> {
    let (t, d) = (m.rows(), m.cols());
    if t > u32::MAX as usize || d > u32::MAX as usize {
        return Err(Error::SizeOverflow(t as u64, d as u64));
    }
    let mut bytes = Vec::with_capacity(HEADER_LEN + 4 * m.len());
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.push(DTYPE_F32);
    bytes.push(0);
    bytes.extend_from_slice(&(t as u32).to_le_bytes());
    bytes.extend_from_slice(&(d as u32).to_le_bytes());
    for &v in m.data() {
        bytes.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    Ok(bytes)
}

/// Read only the 16-byte header — enough to cross-check a manifest without
/// touching the payload.
pub fn read_header(path: &Path) -> Result<FeatureHeader> {
    let bytes = fs::read(path).map_err(file_err(path))?;
    parse_header(&bytes)
}

pub fn load_features<S: Scalar>(path: &Path) -> Result<Tensor<S>> {
    let bytes = fs::read(path).map_err(file_err(path))?;
    parse(&bytes)
}

pub fn write_features<S: Scalar>(path: &Path, m: &Tensor<S>) -> Result<()> {
    fs::write(path, encode(m)?).map_err(file_err(path))
}
