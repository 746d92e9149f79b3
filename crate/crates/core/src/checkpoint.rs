//! Binary checkpoints of a [`WaveField`].
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                  |
//! |--------|------|------------------------|
//! | 0      | 4    | magic `ICQN`           |
//! | 4      | 4    | format version (`u32`) |
//! | 8      | 4    | `n` (`u32`)            |
//! | 12     | 8    | `L` (`f64`)            |
//! | 20     | 8    | `t` (`f64`)            |
//! | 28     | 16n² | samples as (re, im) `f64` pairs, row-major |

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, WaveField, C64};

pub const MAGIC: &[u8; 4] = b"ICQN";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckpointHeader {
    pub version: u32,
    pub n: u32,
    pub half_width: f64,
    pub t: f64,
}

impl CheckpointHeader {
    pub fn payload_len(&self) -> usize {
        16 * (self.n as usize) * (self.n as usize)
    }
}

pub fn encode_checkpoint(u: &WaveField, t: f64) -> Vec<u8> {
    let grid = u.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.half_width().to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for z in u.samples() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode_header(bytes: &[u8]) -> Result<CheckpointHeader> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::Checkpoint("not an ICQN checkpoint".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Checkpoint(format!(
            "truncated header: {} bytes, expected {HEADER_LEN}",
            bytes.len()
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    Ok(CheckpointHeader {
        version,
        n: u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")),
        half_width: f64_at(bytes, 12),
        t: f64_at(bytes, 20),
    })
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(WaveField, f64)> {
    let header = decode_header(bytes)?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != header.payload_len() {
        return Err(Error::Checkpoint(format!(
            "payload length mismatch: {} bytes, expected {}",
            payload.len(),
            header.payload_len()
        )));
    }
    let grid = Grid2D::new(header.n as usize, header.half_width)
        .map_err(|e| Error::Checkpoint(format!("invalid grid in header: {e}")))?;
    let data = payload
        .chunks_exact(16)
        .map(|c| C64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    Ok((WaveField::from_samples(&grid, data)?, header.t))
}

pub fn write_checkpoint(path: &Path, u: &WaveField, t: f64) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode_checkpoint(u, t))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(WaveField, f64)> {
    decode_checkpoint(&fs::read(path)?)
}

pub fn read_header(path: &Path) -> Result<CheckpointHeader> {
    let bytes = fs::read(path)?;
    decode_header(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = Grid2D::new(16, 2.5).unwrap();
        let bytes = encode_checkpoint(&WaveField::zeros(&g), 0.75);
        assert_eq!(bytes.len(), HEADER_LEN + 16 * 256);
        assert_eq!(&bytes[..4], b"ICQN");
        let h = decode_header(&bytes).unwrap();
        assert_eq!(h, CheckpointHeader { version: 1, n: 16, half_width: 2.5, t: 0.75 });
    }

    #[test]
    fn truncated_payload_rejected() {
        let g = Grid2D::new(16, 1.0).unwrap();
        let bytes = encode_checkpoint(&WaveField::zeros(&g), 0.0);
        let err = decode_checkpoint(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(err.to_string().contains("payload length mismatch"));
    }

    #[test]
    fn wrong_magic_rejected() {
        let g = Grid2D::new(16, 1.0).unwrap();
        let mut bytes = encode_checkpoint(&WaveField::zeros(&g), 0.0);
        bytes[0] = b'X';
        assert!(decode_checkpoint(&bytes).unwrap_err().to_string().contains("not an ICQN checkpoint"));
        assert!(decode_checkpoint(b"IC").unwrap_err().to_string().contains("not an ICQN checkpoint"));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.icqn");
        let g = Grid2D::new(16, 3.0).unwrap();
        let u = WaveField::from_fn(&g, |x, y| C64::new(x.sin(), y * x));
        write_checkpoint(&path, &u, 1.5).unwrap();
        let (v, t) = read_checkpoint(&path).unwrap();
        assert_eq!(t, 1.5);
        assert_eq!(v.samples(), u.samples());
        assert_eq!(read_header(&path).unwrap().n, 16);
    }

    proptest! {
        #[test]
        fn byte_exact_round_trip(
            seed in proptest::collection::vec((any::<f64>(), any::<f64>()), 256),
            t in any::<f64>(),
        ) {
            let g = Grid2D::new(16, 4.0).unwrap();
            let data = seed.iter().map(|&(a, b)| C64::new(a, b)).collect();
            let u = WaveField::from_samples(&g, data).unwrap();
            let bytes = encode_checkpoint(&u, t);
            let (v, t2) = decode_checkpoint(&bytes).unwrap();
            prop_assert_eq!(encode_checkpoint(&v, t2), bytes);
        }
    }
}
