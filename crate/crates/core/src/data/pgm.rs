//! Binary PGM (P5) codec.

use std::fs;
use std::path::Path;

use crate::contrast::GrayImage;
use crate::error::{Error, Result};

/// Raw P5 raster: samples are stored as read, in `0..=maxval`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Pgm {
    /// Quantizes a `[0, 1]` image to 8 bits.
    pub fn from_image(img: &GrayImage) -> Self {
        let samples = img.pixels().iter().map(|p| (p * 255.0).round() as u16).collect();
        Pgm { width: img.width(), height: img.height(), maxval: 255, samples }
    }

    /// Normalizes samples by `maxval` into `[0, 1]`.
    pub fn to_image(&self) -> GrayImage {
        let m = f64::from(self.maxval);
        let pixels = self.samples.iter().map(|&s| f64::from(s) / m).collect();
        GrayImage::new(self.height, self.width, pixels).expect("validated raster")
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        if self.maxval > 255 {
            self.samples.iter().for_each(|s| out.extend_from_slice(&s.to_be_bytes()));
        } else {
            out.extend(self.samples.iter().map(|&s| s as u8));
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, String> {
        let mut pos = 0;
        if bytes.get(..2) != Some(b"P5") {
            return Err("not a binary PGM (missing P5 magic)".into());
        }
        pos += 2;
        let width = header_number(bytes, &mut pos, "width")?;
        let height = header_number(bytes, &mut pos, "height")?;
        let maxval = header_number(bytes, &mut pos, "maxval")?;
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => return Err("missing whitespace after maxval".into()),
        }
        if width == 0 || height == 0 {
            return Err(format!("empty raster {width}x{height}"));
        }
        if !(1..=65535).contains(&maxval) {
            return Err(format!("maxval {maxval} outside 1..=65535"));
        }
        let maxval = maxval as u16;
        let n = width.checked_mul(height).ok_or("raster size overflows")?;
        let bps = if maxval > 255 { 2 } else { 1 };
        let raster = &bytes[pos..];
        if raster.len() < n * bps {
            return Err(format!("raster truncated: expected {} bytes, found {}", n * bps, raster.len()));
        }
        let samples: Vec<u16> = if bps == 2 {
            raster[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
        } else {
            raster[..n].iter().map(|&b| u16::from(b)).collect()
        };
        if let Some(s) = samples.iter().find(|&&s| s > maxval) {
            return Err(format!("sample {s} exceeds maxval {maxval}"));
        }
        Ok(Pgm { width, height, maxval, samples })
    }
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize, String> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            _ => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(format!("malformed header: expected {what}"));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .expect("ascii digits")
        .parse()
        .map_err(|_| format!("malformed header: {what} too large"))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::data(path, e.to_string()))?;
    Ok(Pgm::decode(&bytes).map_err(|msg| Error::data(path, msg))?.to_image())
}

pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, Pgm::from_image(img).encode()).map_err(|e| Error::data(path, e.to_string()))
}
