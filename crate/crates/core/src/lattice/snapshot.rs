//! Binary field snapshots.
//!
//! Layout: 32-byte header (`ANLS`, version u32, d u32, n u32, box length
//! f64, real flag u8, zero padding) followed by `n^d` `(re, im)` f64 pairs,
//! all little-endian, row-major.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Field, Grid};
use crate::{Cx, Error, Result, Scalar};

pub const MAGIC: &[u8; 4] = b"ANLS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

pub fn encode<S: Scalar>(f: &Field<S>) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * f.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&g.box_length().to_le_bytes());
    out.push(f.is_real() as u8);
    out.resize(HEADER_LEN, 0);
    for z in f.values() {
        out.extend_from_slice(&z.re.as_f64().to_le_bytes());
        out.extend_from_slice(&z.im.as_f64().to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<Field<f64>> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing ANLS header".into()));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = u32_at(bytes, 8) as usize;
    let n = u32_at(bytes, 12) as usize;
    let box_length = f64_at(bytes, 16);
    let real = match bytes[24] {
        0 => false,
        1 => true,
        b => return Err(Error::Format(format!("bad real flag {b}"))),
    };
    let grid = Grid::new(dim, n, box_length)?;
    let expected = HEADER_LEN + 16 * grid.len();
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let values: Vec<Cx<f64>> = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| Cx::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    let f = Field::from_complex(grid, values)?;
    Ok(if real { f.into_real() } else { f })
}

pub fn write_snapshot<S: Scalar>(path: impl AsRef<Path>, f: &Field<S>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode(f)).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Field<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let grid = Grid::new(2, 8, 3.5).unwrap();
        let f = Field::<f64>::from_fn(grid, |x| x[0]);
        let bytes = encode(&f);
        assert_eq!(&bytes[..4], b"ANLS");
        assert_eq!(u32_at(&bytes, 8), 2);
        assert_eq!(u32_at(&bytes, 12), 8);
        assert_eq!(f64_at(&bytes, 16), 3.5);
        assert_eq!(bytes[24], 1);
        assert_eq!(bytes.len(), 32 + 16 * 64);
    }

    #[test]
    fn file_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.anls");
        let grid = Grid::new(3, 8, 2.0).unwrap();
        let f = Field::<f64>::plane_wave(grid, [1, 2, -3]);
        write_snapshot(&path, &f).unwrap();
        let g = read_snapshot(&path).unwrap();
        assert_eq!(g.grid(), f.grid());
        assert_eq!(g.values(), f.values());
        assert!(!g.is_real());
    }

    #[test]
    fn rejects_truncated_payload() {
        let grid = Grid::new(1, 8, 1.0).unwrap();
        let mut bytes = encode(&Field::<f64>::zeros(grid));
        bytes.pop();
        assert!(matches!(decode(&bytes), Err(Error::Format(_))));
    }
}
