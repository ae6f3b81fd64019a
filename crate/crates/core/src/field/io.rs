//! The `QCBF1` binary field format: magic `QCBF1\0`, little-endian `u32` N,
//! little-endian `f64` L, then N² `(f64 re, f64 im)` pairs row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{ComplexField, GridSpec};
use crate::{Error, Result};

pub const MAGIC: [u8; 6] = *b"QCBF1\0";

fn malformed(reason: impl Into<String>) -> Error {
    Error::Format {
        module: "field",
        op: "read_qcbf1",
        reason: reason.into(),
    }
}

pub fn write_qcbf1<W: Write>(field: &ComplexField, mut w: W) -> Result<()> {
    let g = field.grid();
    w.write_all(&MAGIC)?;
    w.write_all(&(g.resolution() as u32).to_le_bytes())?;
    w.write_all(&g.half_extent().to_le_bytes())?;
    for v in field.samples() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_qcbf1<R: Read>(mut r: R) -> Result<ComplexField> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)
        .map_err(|_| malformed("truncated header"))?;
    if magic != MAGIC {
        return Err(malformed(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4).map_err(|_| malformed("truncated header"))?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8).map_err(|_| malformed("truncated header"))?;
    let l = f64::from_le_bytes(b8);
    let grid = GridSpec::new(n, l).map_err(|e| malformed(e.to_string()))?;
    let mut samples = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        r.read_exact(&mut b8).map_err(|_| malformed("truncated payload"))?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8).map_err(|_| malformed("truncated payload"))?;
        let im = f64::from_le_bytes(b8);
        if !(re.is_finite() && im.is_finite()) {
            return Err(malformed(format!("non-finite sample #{}", samples.len())));
        }
        samples.push(Complex64::new(re, im));
    }
    if r.read(&mut b8)? != 0 {
        return Err(malformed("trailing bytes after payload"));
    }
    ComplexField::from_samples(grid, samples)
}

pub fn save(field: &ComplexField, path: impl AsRef<Path>) -> Result<()> {
    write_qcbf1(field, BufWriter::new(File::create(path)?))
}

pub fn load(path: impl AsRef<Path>) -> Result<ComplexField> {
    read_qcbf1(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = GridSpec::new(16, 1.5).unwrap();
        let f = ComplexField::constant(g, Complex64::new(1.0, -2.0));
        let mut buf = Vec::new();
        write_qcbf1(&f, &mut buf).unwrap();
        assert_eq!(&buf[..6], b"QCBF1\0");
        assert_eq!(&buf[6..10], &16u32.to_le_bytes());
        assert_eq!(&buf[10..18], &1.5f64.to_le_bytes());
        assert_eq!(buf.len(), 18 + 16 * 16 * 16);
        assert_eq!(&buf[18..26], &1.0f64.to_le_bytes());
        assert_eq!(&buf[26..34], &(-2.0f64).to_le_bytes());
    }

    #[test]
    fn rejects_bad_magic_and_non_finite() {
        let g = GridSpec::new(16, 1.0).unwrap();
        let f = ComplexField::zeros(g);
        let mut buf = Vec::new();
        write_qcbf1(&f, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[4] = b'2';
        assert!(read_qcbf1(&bad[..]).is_err());
        let mut nan = buf.clone();
        nan[18..26].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(read_qcbf1(&nan[..]).is_err());
        assert!(read_qcbf1(&buf[..buf.len() - 1]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_qcbf1(&long[..]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(vals in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 256), l in 0.1f64..10.0) {
            let g = GridSpec::new(16, l).unwrap();
            let f = ComplexField::from_samples(g, vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
            let mut buf = Vec::new();
            write_qcbf1(&f, &mut buf).unwrap();
            let back = read_qcbf1(&buf[..]).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
