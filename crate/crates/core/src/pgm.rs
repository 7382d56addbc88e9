//! 8-bit grayscale PGM images (P2 and P5 read, P5 written).

use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Dimension(format!("{} pixels for a {width}x{height} image", pixels.len())));
        }
        Ok(Self { width, height, maxval: 255, pixels })
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Top-left `w x h` window.
    pub fn crop(&self, w: usize, h: usize) -> Self {
        let (w, h) = (w.min(self.width), h.min(self.height));
        let pixels = (0..h).flat_map(|y| self.pixels[y * self.width..y * self.width + w].iter().copied()).collect();
        Self { width: w, height: h, maxval: self.maxval, pixels }
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let magic = token(bytes, &mut pos)?;
        let binary = match magic.as_slice() {
            b"P5" => true,
            b"P2" => false,
            _ => return Err(Error::Format("not a P2/P5 PGM file".into())),
        };
        let width = number(bytes, &mut pos)?;
        let height = number(bytes, &mut pos)?;
        let maxval = number(bytes, &mut pos)?;
        if maxval == 0 || maxval > 255 {
            return Err(Error::Format(format!("maxval {maxval} is not 8-bit")));
        }
        let n = width * height;
        let pixels = if binary {
            // exactly one whitespace byte separates the header from the raster
            pos += 1;
            let raster = bytes.get(pos..pos + n).ok_or_else(|| Error::Format("truncated raster".into()))?;
            raster.to_vec()
        } else {
            (0..n)
                .map(|_| {
                    let v = number(bytes, &mut pos)?;
                    if v > maxval {
                        return Err(Error::Format(format!("sample {v} exceeds maxval")));
                    }
                    Ok(v as u8)
                })
                .collect::<Result<_>>()?
        };
        if pixels.iter().any(|&p| p as usize > maxval) {
            return Err(Error::Format("sample exceeds maxval".into()));
        }
        Ok(Self { width, height, maxval: maxval as u16, pixels })
    }

    pub fn to_p5(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_p5())?)
    }
}

fn token(bytes: &[u8], pos: &mut usize) -> Result<Vec<u8>> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("unexpected end of header".into()));
    }
    Ok(bytes[start..*pos].to_vec())
}

fn number(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    let t = token(bytes, pos)?;
    std::str::from_utf8(&t)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad number {:?}", String::from_utf8_lossy(&t))))
}
