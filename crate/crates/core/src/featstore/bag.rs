use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{write_atomic, ByteReader};
use crate::nn::DenseMatrix;

pub const BAG_MAGIC: &[u8; 4] = b"BAG1";
pub const BAG_VERSION: u32 = 1;

/// One slide: label, level-0 patch corners and the instance-feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureBag {
    pub slide_id: String,
    pub label: u8,
    pub coords: Vec<(u32, u32)>,
    pub features: DenseMatrix,
}

impl FeatureBag {
    pub fn new(slide_id: impl Into<String>, label: u8, coords: Vec<(u32, u32)>, features: DenseMatrix) -> Result<Self> {
        let bag = Self { slide_id: slide_id.into(), label, coords, features };
        bag.validate()?;
        Ok(bag)
    }

    pub fn validate(&self) -> Result<()> {
        if self.label > 2 {
            return Err(Error::contract(format!("label {} outside 0..=2", self.label)));
        }
        if self.features.rows() == 0 {
            return Err(Error::contract(format!("bag {} has no instances", self.slide_id)));
        }
        if self.coords.len() != self.features.rows() {
            return Err(Error::contract(format!(
                "bag {}: {} coords for {} feature rows",
                self.slide_id,
                self.coords.len(),
                self.features.rows()
            )));
        }
        if self.slide_id.len() > u16::MAX as usize {
            return Err(Error::contract("slide id longer than 65535 bytes"));
        }
        Ok(())
    }

    pub fn n_instances(&self) -> usize {
        self.features.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let (n, d) = self.features.shape();
        let id = self.slide_id.as_bytes();
        let mut out = Vec::with_capacity(24 + id.len() + 8 * n + 4 * n * d);
        out.extend_from_slice(BAG_MAGIC);
        out.extend_from_slice(&BAG_VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&(d as u32).to_le_bytes());
        out.push(self.label);
        out.extend_from_slice(&[0, 0, 0]);
        out.extend_from_slice(&(id.len() as u16).to_le_bytes());
        out.extend_from_slice(id);
        for &(x, y) in &self.coords {
            out.extend_from_slice(&x.to_le_bytes());
            out.extend_from_slice(&y.to_le_bytes());
        }
        for &v in self.features.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "BAG1 file");
        if r.take(4, "magic")? != BAG_MAGIC {
            return Err(Error::format(0, "bad magic, expected BAG1"));
        }
        let version = r.u32("version")?;
        if version != BAG_VERSION {
            return Err(Error::format(4, format!("unsupported BAG1 version {version}")));
        }
        let n = r.u32("instance count")? as usize;
        let d = r.u32("feature dim")? as usize;
        let label_at = r.offset();
        let label = r.u8("label")?;
        if label > 2 {
            return Err(Error::format(label_at, format!("label {label} outside 0..=2")));
        }
        r.take(3, "padding")?;
        let id_len = r.u16("slide id length")? as usize;
        let id_at = r.offset();
        let slide_id = std::str::from_utf8(r.take(id_len, "slide id")?)
            .map_err(|_| Error::format(id_at, "slide id is not UTF-8"))?
            .to_string();
        if n == 0 {
            return Err(Error::format(8, "bag declares zero instances"));
        }
        let need = n
            .checked_mul(8)
            .and_then(|c| n.checked_mul(d)?.checked_mul(4)?.checked_add(c))
            .ok_or_else(|| Error::format(8, "n/d overflow"))?;
        if r.remaining() != need {
            return Err(Error::format(
                r.offset(),
                format!("n={n}, d={d} needs {need} payload bytes, found {}", r.remaining()),
            ));
        }
        let mut coords = Vec::with_capacity(n);
        for _ in 0..n {
            coords.push((r.u32("x")?, r.u32("y")?));
        }
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n * d {
            data.push(r.f32("feature")? as f64);
        }
        r.finish()?;
        Ok(Self { slide_id, label, coords, features: DenseMatrix::from_vec(n, d, data)? })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FeatureBag {
        let f = DenseMatrix::from_vec(2, 3, vec![0.5, -1.0, 2.0, 0.1, 0.2, 0.3]).unwrap();
        FeatureBag::new("s1", 1, vec![(0, 0), (256, 512)], f).unwrap()
    }

    #[test]
    fn header_bytes() {
        let b = small().to_bytes().unwrap();
        let expected: Vec<u8> = [
            &b"BAG1"[..],
            &[1, 0, 0, 0],
            &[2, 0, 0, 0],
            &[3, 0, 0, 0],
            &[1],
            &[0, 0, 0],
            &[2, 0],
            b"s1",
        ]
        .concat();
        assert_eq!(&b[..expected.len()], &expected[..]);
        assert_eq!(b.len(), expected.len() + 16 + 24);
    }

    #[test]
    fn truncation_names_lengths() {
        let b = small().to_bytes().unwrap();
        let err = FeatureBag::from_bytes(&b[..b.len() - 5]).unwrap_err().to_string();
        assert!(err.contains("needs 40") && err.contains("found 35"), "{err}");
        let err = FeatureBag::from_bytes(&b[..10]).unwrap_err().to_string();
        assert!(err.contains("byte 8"), "{err}");
    }

    #[test]
    fn bad_magic_and_version() {
        let mut b = small().to_bytes().unwrap();
        b[4] = 2;
        assert!(FeatureBag::from_bytes(&b).unwrap_err().to_string().contains("version"));
        b[0] = b'X';
        assert!(FeatureBag::from_bytes(&b).unwrap_err().to_string().contains("magic"));
    }

    #[test]
    fn mismatched_coords_rejected() {
        let f = DenseMatrix::zeros(2, 3);
        assert!(FeatureBag::new("a", 0, vec![(0, 0)], f).is_err());
    }
}
