//! `TNS3` binary tensor files.
//!
//! Layout, all little-endian:
//!
//! | offset | size        | field                               |
//! |--------|-------------|-------------------------------------|
//! | 0      | 4           | magic `b"TNS3"`                     |
//! | 4      | 2           | format version (`u16`, currently 1) |
//! | 6      | 8 x 3       | dims `n1, n2, n3` (`u64`)           |
//! | 30     | 8 x n1n2n3  | values (`f64`), i fastest, k slowest|

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

pub const MAGIC: &[u8; 4] = b"TNS3";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 30;

pub fn encode(x: &Tensor3) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * x.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in x.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in x.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn fmt_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

pub fn decode(bytes: &[u8]) -> Result<Tensor3> {
    if bytes.len() < HEADER_LEN {
        return Err(fmt_err(
            bytes.len(),
            format!("header truncated: expected {HEADER_LEN} bytes, got {}", bytes.len()),
        ));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fmt_err(0, format!("bad magic {:?}, expected \"TNS3\"", &bytes[0..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(fmt_err(4, format!("unsupported version {version}, expected {VERSION}")));
    }
    let mut dims = [0usize; 3];
    for (a, d) in dims.iter_mut().enumerate() {
        let off = 6 + 8 * a;
        let raw = u64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes"));
        if raw == 0 {
            return Err(fmt_err(off, format!("dimension {} is zero", a + 1)));
        }
        *d = usize::try_from(raw).map_err(|_| fmt_err(off, "dimension does not fit in memory"))?;
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| fmt_err(6, "dimensions overflow"))?;
    let expected = HEADER_LEN + count;
    if bytes.len() != expected {
        return Err(fmt_err(
            bytes.len().min(expected),
            format!(
                "payload length mismatch: expected {expected} bytes in total for dims {dims:?}, got {}",
                bytes.len()
            ),
        ));
    }
    let mut data = Vec::with_capacity(count / 8);
    for (idx, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        if !v.is_finite() {
            return Err(Error::Format {
                offset: (HEADER_LEN + 8 * idx) as u64,
                message: format!("non-finite value {v} at element {idx}"),
            });
        }
        data.push(v);
    }
    Tensor3::from_vec(dims, data)
}

pub fn write_tensor<W: Write>(x: &Tensor3, mut w: W) -> std::io::Result<()> {
    w.write_all(&encode(x))
}

pub fn read_tensor<R: Read>(mut r: R) -> Result<Tensor3> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| Error::Io {
        path: "<reader>".into(),
        source: e,
    })?;
    decode(&buf)
}

pub fn save_tensor(x: &Tensor3, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(x)).map_err(|e| Error::io(path, e))
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor3> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let x = Tensor3::from_fn(1, 2, 3, |_, j, k| (j + 2 * k) as f64);
        let b = encode(&x);
        assert_eq!(&b[0..4], b"TNS3");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(u64::from_le_bytes(b[14..22].try_into().unwrap()), 2);
        assert_eq!(b.len(), HEADER_LEN + 6 * 8);
        assert_eq!(f64::from_le_bytes(b[30 + 8..38 + 8].try_into().unwrap()), 1.0);
    }

    #[test]
    fn truncated_payload_reports_lengths() {
        let x = Tensor3::filled(2, 2, 2, 1.0);
        let mut b = encode(&x);
        b.truncate(b.len() - 3);
        match decode(&b) {
            Err(Error::Format { message, .. }) => {
                assert!(message.contains("expected 94"), "{message}");
                assert!(message.contains("got 91"), "{message}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_version() {
        let mut b = encode(&Tensor3::zeros(1, 1, 1));
        b[0] = b'X';
        assert!(matches!(decode(&b), Err(Error::Format { offset: 0, .. })));
        let mut b = encode(&Tensor3::zeros(1, 1, 1));
        b[4] = 2;
        assert!(matches!(decode(&b), Err(Error::Format { offset: 4, .. })));
        assert!(matches!(decode(b"TNS"), Err(Error::Format { .. })));
    }

    #[test]
    fn non_finite_payload_rejected() {
        let mut b = encode(&Tensor3::zeros(2, 1, 1));
        b[38..46].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode(&b), Err(Error::Format { offset: 38, .. })));
    }
}
