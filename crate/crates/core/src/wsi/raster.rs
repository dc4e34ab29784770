//! 8-bit rasters and binary PPM/PGM I/O.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    /// 3 for interleaved RGB, 1 for gray.
    pub channels: usize,
    pub data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::contract(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::contract(format!(
                "raster data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, pixel: &[u8]) -> Self {
        let channels = pixel.len();
        let data = pixel.iter().copied().cycle().take(width * height * channels).collect();
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn gray(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// Copy of the `w × h` window at `(x, y)`; must lie inside the image.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::contract(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for row in y..y + h {
            let start = (row * self.width + x) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        Self::new(w, h, self.channels, data)
    }

    pub fn to_pnm(&self) -> Vec<u8> {
        self.to_pnm_with_comment(None)
    }

    /// PNM bytes with an optional single-line `# comment` after the magic.
    pub fn to_pnm_with_comment(&self, comment: Option<&str>) -> Vec<u8> {
        let magic = if self.channels == 3 { "P6" } else { "P5" };
        let mut header = format!("{magic}\n");
        if let Some(c) = comment {
            header.push_str(&format!("# {}\n", c.replace(['\n', '\r'], " ")));
        }
        header.push_str(&format!("{} {}\n255\n", self.width, self.height));
        let mut out = header.into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_pnm(bytes: &[u8]) -> Result<Self> {
        let mut cursor = PnmCursor { bytes, pos: 0 };
        let magic = cursor.token()?;
        let channels = match magic.as_str() {
            "P6" => 3,
            "P5" => 1,
            other => return Err(Error::format(0, format!("unsupported PNM magic {other:?}"))),
        };
        let width = cursor.number()?;
        let height = cursor.number()?;
        let maxval = cursor.number()?;
        if maxval != 255 {
            return Err(Error::format(cursor.pos, format!("maxval {maxval} (only 255 supported)")));
        }
        // exactly one whitespace byte separates the header from the samples
        let start = cursor.pos + 1;
        let need = width * height * channels;
        if bytes.len() < start + need {
            return Err(Error::format(
                bytes.len(),
                format!("expected {need} sample bytes, found {}", bytes.len().saturating_sub(start)),
            ));
        }
        Self::new(width, height, channels, bytes[start..start + need].to_vec())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        Self::from_pnm(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, &self.to_pnm())
    }
}

struct PnmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PnmCursor<'_> {
    fn token(&mut self) -> Result<String> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b'#') => {
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                        self.pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(_) => break,
                None => return Err(Error::format(self.pos, "truncated PNM header")),
            }
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<usize> {
        let at = self.pos;
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::format(at, format!("expected a number, found {tok:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pnm_round_trip_with_comments() {
        let img = RasterImage::new(2, 2, 3, (0..12).collect()).unwrap();
        assert_eq!(RasterImage::from_pnm(&img.to_pnm()).unwrap(), img);
        let mut bytes = b"P5\n# made by hand\n3 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        let g = RasterImage::from_pnm(&bytes).unwrap();
        assert_eq!((g.width, g.height, g.channels), (3, 1, 1));
        assert_eq!(g.data, vec![1, 2, 3]);
    }

    #[test]
    fn pnm_truncation_is_reported() {
        let img = RasterImage::filled(4, 4, &[9, 9, 9]);
        let bytes = img.to_pnm();
        let err = RasterImage::from_pnm(&bytes[..bytes.len() - 5]).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn crop_bounds() {
        let img = RasterImage::gray(4, 3, (0..12).collect()).unwrap();
        let c = img.crop(1, 1, 2, 2).unwrap();
        assert_eq!(c.data, vec![5, 6, 9, 10]);
        assert!(img.crop(3, 0, 2, 1).is_err());
    }
}
