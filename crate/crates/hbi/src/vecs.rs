//! `.fvecs` / `.ivecs` files: each record is a little-endian `i32` count `d`
//! followed by `d` little-endian `f32` (or `i32`) values.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Vectors read from a vecs file, flattened row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VecFile<T> {
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: Clone> VecFile<T> {
    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

fn parse<T>(bytes: &[u8], decode: impl Fn([u8; 4]) -> T) -> Result<VecFile<T>> {
    let mut out = VecFile {
        dim: 0,
        data: Vec::new(),
    };
    let mut offset = 0usize;
    while offset < bytes.len() {
        let header = bytes.get(offset..offset + 4).ok_or_else(|| Error::Format {
            offset: offset as u64,
            message: "truncated record header".into(),
        })?;
        let d = i32::from_le_bytes(header.try_into().expect("4 bytes"));
        if d <= 0 {
            return Err(Error::Format {
                offset: offset as u64,
                message: format!("record dimension {d} is not positive"),
            });
        }
        let d = d as usize;
        if out.dim == 0 {
            out.dim = d;
        } else if d != out.dim {
            return Err(Error::Format {
                offset: offset as u64,
                message: format!("record dimension {d} differs from {}", out.dim),
            });
        }
        let body_start = offset + 4;
        let body = bytes
            .get(body_start..body_start + 4 * d)
            .ok_or_else(|| Error::Format {
                offset: offset as u64,
                message: format!(
                    "record claims {d} values but only {} bytes remain",
                    bytes.len() - body_start
                ),
            })?;
        out.data.extend(
            body.chunks_exact(4)
                .map(|c| decode(c.try_into().expect("4 bytes"))),
        );
        offset = body_start + 4 * d;
    }
    Ok(out)
}

pub fn parse_fvecs(bytes: &[u8]) -> Result<VecFile<f32>> {
    parse(bytes, f32::from_le_bytes)
}

pub fn parse_ivecs(bytes: &[u8]) -> Result<VecFile<i32>> {
    parse(bytes, i32::from_le_bytes)
}

pub fn load_fvecs(path: impl AsRef<Path>) -> Result<VecFile<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_fvecs(&bytes)
}

pub fn load_ivecs(path: impl AsRef<Path>) -> Result<VecFile<i32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ivecs(&bytes)
}

fn encode<T: Copy>(rows: &[T], dim: usize, to_le: impl Fn(T) -> [u8; 4]) -> Vec<u8> {
    let mut out = Vec::with_capacity(rows.len() * 4 + rows.len() / dim.max(1) * 4);
    for row in rows.chunks_exact(dim.max(1)) {
        out.extend_from_slice(&(dim as i32).to_le_bytes());
        for &v in row {
            out.extend_from_slice(&to_le(v));
        }
    }
    out
}

pub fn encode_fvecs(data: &[f32], dim: usize) -> Vec<u8> {
    encode(data, dim, f32::to_le_bytes)
}

pub fn encode_ivecs(data: &[i32], dim: usize) -> Vec<u8> {
    encode(data, dim, i32::to_le_bytes)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn write_fvecs(path: impl AsRef<Path>, data: &[f32], dim: usize) -> Result<()> {
    write_bytes(path.as_ref(), &encode_fvecs(data, dim))
}

pub fn write_ivecs(path: impl AsRef<Path>, data: &[i32], dim: usize) -> Result<()> {
    write_bytes(path.as_ref(), &encode_ivecs(data, dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_record() {
        let mut bytes = 2i32.to_le_bytes().to_vec();
        bytes.extend(1.0f32.to_le_bytes());
        bytes.extend(2.0f32.to_le_bytes());
        let v = parse_fvecs(&bytes).unwrap();
        assert_eq!(v.dim, 2);
        assert_eq!(v.data, vec![1.0, 2.0]);
    }

    #[test]
    fn empty_input() {
        let v = parse_fvecs(&[]).unwrap();
        assert!(v.is_empty());
        assert_eq!(v.len(), 0);
    }

    #[test]
    fn truncated_record_reports_offset() {
        let mut bytes = encode_fvecs(&[1.0, 2.0, 3.0], 3);
        bytes.extend(3i32.to_le_bytes());
        bytes.extend(1.0f32.to_le_bytes());
        bytes.extend(2.0f32.to_le_bytes());
        match parse_fvecs(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 16),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_and_nonpositive_dims() {
        let mut bytes = encode_fvecs(&[1.0, 2.0], 2);
        bytes.extend(encode_fvecs(&[1.0], 1));
        assert!(matches!(
            parse_fvecs(&bytes),
            Err(Error::Format { offset: 12, .. })
        ));
        assert!(matches!(
            parse_fvecs(&0i32.to_le_bytes()),
            Err(Error::Format { offset: 0, .. })
        ));
        assert!(matches!(parse_fvecs(&[1, 0]), Err(Error::Format { .. })));
    }

    proptest! {
        #[test]
        fn encode_parse_roundtrip(dim in 1usize..9, rows in 0usize..20, seed in any::<i32>()) {
            let data: Vec<i32> = (0..dim * rows).map(|i| seed.wrapping_mul(i as i32 + 7)).collect();
            let parsed = parse_ivecs(&encode_ivecs(&data, dim)).unwrap();
            prop_assert_eq!(parsed.data, data);
            let floats: Vec<f32> = (0..dim * rows).map(|i| i as f32 * 0.5 - 3.0).collect();
            prop_assert_eq!(parse_fvecs(&encode_fvecs(&floats, dim)).unwrap().data, floats);
        }
    }
}
