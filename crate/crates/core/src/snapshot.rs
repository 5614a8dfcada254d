//! VIL1 field snapshots.
//!
//! Layout, little-endian, no padding: the ASCII magic `VIL1`, `u32 n`,
//! `f64 L`, `f64 t`, `u8 kind` (0 scalar, 1 vector), then `n·n` `f64` values
//! row-major, repeated for the second component of a vector field.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::field::{FieldError, ScalarField, VectorField};
use crate::grid::GridSpec;

pub const MAGIC: &[u8; 4] = b"VIL1";

#[derive(Debug, Clone, PartialEq)]
pub enum SnapshotData {
    Scalar(ScalarField),
    Vector(VectorField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub data: SnapshotData,
}

impl Snapshot {
    pub fn scalar(t: f64, f: ScalarField) -> Self {
        Self {
            t,
            data: SnapshotData::Scalar(f),
        }
    }

    pub fn vector(t: f64, v: VectorField) -> Self {
        Self {
            t,
            data: SnapshotData::Vector(v),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        match &self.data {
            SnapshotData::Scalar(f) => f.grid(),
            SnapshotData::Vector(v) => v.grid(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), FieldError> {
        let g = self.grid();
        let n = u32::try_from(g.n())
            .map_err(|_| FieldError::Snapshot(format!("grid size {} exceeds u32", g.n())))?;
        w.write_all(MAGIC)?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&g.side_length().to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        let comps: Vec<&ScalarField> = match &self.data {
            SnapshotData::Scalar(f) => {
                w.write_all(&[0])?;
                vec![f]
            }
            SnapshotData::Vector(v) => {
                w.write_all(&[1])?;
                vec![v.u1(), v.u2()]
            }
        };
        for c in comps {
            let mut buf = Vec::with_capacity(8 * c.values().len());
            for v in c.values() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, FieldError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(FieldError::Snapshot(format!("bad magic {magic:?}")));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let l = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let t = f64::from_le_bytes(b8);
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind)?;
        let grid = GridSpec::new(l, n)?;
        let read_component = |r: &mut R| -> Result<ScalarField, FieldError> {
            let mut buf = vec![0u8; 8 * grid.len()];
            r.read_exact(&mut buf)?;
            let values = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            ScalarField::new(grid, values)
        };
        let data = match kind[0] {
            0 => SnapshotData::Scalar(read_component(&mut r)?),
            1 => {
                let u1 = read_component(&mut r)?;
                let u2 = read_component(&mut r)?;
                SnapshotData::Vector(VectorField::new(u1, u2)?)
            }
            k => return Err(FieldError::Snapshot(format!("unknown kind byte {k}"))),
        };
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(FieldError::Snapshot("trailing bytes after field data".into()));
        }
        Ok(Self { t, data })
    }

    pub fn save(&self, path: &Path) -> Result<(), FieldError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FieldError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = GridSpec::new(8.0, 16).unwrap();
        let f = ScalarField::from_fn(g, |x, y| x * y);
        let bytes = Snapshot::scalar(0.25, f).to_bytes();
        assert_eq!(bytes.len(), 4 + 4 + 8 + 8 + 1 + 8 * 256);
        assert_eq!(&bytes[..4], b"VIL1");
        assert_eq!(&bytes[4..8], &16u32.to_le_bytes());
        assert_eq!(&bytes[8..16], &8.0f64.to_le_bytes());
        assert_eq!(&bytes[16..24], &0.25f64.to_le_bytes());
        assert_eq!(bytes[24], 0);
    }

    #[test]
    fn round_trips() {
        let g = GridSpec::new(2.0, 16).unwrap();
        let v = VectorField::from_fn(g, |x, y| [x.sin(), y.cos() * 1e-300]);
        let s = Snapshot::vector(1.5, v);
        let back = Snapshot::read_from(&s.to_bytes()[..]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Snapshot::read_from(&b"VIL2"[..]).is_err());
        let g = GridSpec::new(2.0, 16).unwrap();
        let mut bytes = Snapshot::scalar(0.0, ScalarField::zeros(g)).to_bytes();
        bytes.push(0);
        assert!(Snapshot::read_from(&bytes[..]).is_err());
        bytes.truncate(100);
        assert!(Snapshot::read_from(&bytes[..]).is_err());
    }
}
