//! Binary PPM (P6) input and the `SCT1` raw tensor format.
//!
//! `SCT1` layout: the magic `b"SCT1"`, then `C`, `H`, `W` as little-endian
//! `u32`, then `C*H*W` little-endian `f32` values, channel-major and
//! row-major within a channel.

use std::fs;
use std::path::Path;

use segconv::ChannelTensor;

use crate::error::{BenchError, Result};

pub const SCT_MAGIC: [u8; 4] = *b"SCT1";
const SCT_HEADER: usize = 16;

/// Decodes a binary PPM into a 3-channel tensor with values `byte / 255`.
pub fn decode_ppm(bytes: &[u8]) -> Result<ChannelTensor<f32>> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    let magic = cursor.token()?;
    if magic != b"P6" {
        return Err(BenchError::PpmUnsupported(format!(
            "magic {:?}, only binary P6 is supported",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if maxval != 255 {
        return Err(BenchError::PpmUnsupported(format!(
            "maxval {maxval}, expected 255"
        )));
    }
    if width == 0 || height == 0 {
        return Err(BenchError::PpmHeader(format!(
            "empty image {width}x{height}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => {
            return Err(BenchError::PpmHeader(
                "missing separator after maxval".into(),
            ))
        }
    }
    let pixels = &bytes[cursor.pos..];
    let expected = width * height * 3;
    if pixels.len() < expected {
        return Err(BenchError::PpmTruncated {
            expected,
            found: pixels.len(),
        });
    }
    let plane = width * height;
    let mut data = vec![0.0f32; 3 * plane];
    for (i, rgb) in pixels[..expected].chunks_exact(3).enumerate() {
        for (c, &byte) in rgb.iter().enumerate() {
            data[c * plane + i] = f32::from(byte) / 255.0;
        }
    }
    Ok(ChannelTensor::new(3, height, width, data)?)
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<ChannelTensor<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| BenchError::io(path, e))?;
    decode_ppm(&bytes)
}

/// Encodes `width x height` interleaved RGB bytes as a P6 file.
pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    assert_eq!(rgb.len(), width * height * 3, "rgb buffer size");
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_blank(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_blank();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(BenchError::PpmHeader("unexpected end of header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                BenchError::PpmHeader(format!("bad {what} {:?}", String::from_utf8_lossy(tok)))
            })
    }
}

pub fn encode_raw_tensor(t: &ChannelTensor<f32>) -> Vec<u8> {
    let (c, h, w) = t.shape();
    let mut out = Vec::with_capacity(SCT_HEADER + 4 * c * h * w);
    out.extend_from_slice(&SCT_MAGIC);
    for dim in [c, h, w] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for v in t.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_raw_tensor(bytes: &[u8]) -> Result<ChannelTensor<f32>> {
    if bytes.len() < 4 || bytes[..4] != SCT_MAGIC {
        let mut magic = [0u8; 4];
        let n = bytes.len().min(4);
        magic[..n].copy_from_slice(&bytes[..n]);
        return Err(BenchError::BadMagic(magic));
    }
    if bytes.len() < SCT_HEADER {
        return Err(BenchError::PayloadSize {
            expected: SCT_HEADER,
            found: bytes.len(),
        });
    }
    let dim =
        |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (c, h, w) = (dim(0), dim(1), dim(2));
    let payload = &bytes[SCT_HEADER..];
    let expected = c
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| BenchError::Report(format!("tensor {c}x{h}x{w} too large")))?;
    if payload.len() != expected {
        return Err(BenchError::PayloadSize {
            expected,
            found: payload.len(),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(ChannelTensor::new(c, h, w, data)?)
}

pub fn save_raw_tensor(t: &ChannelTensor<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_raw_tensor(t)).map_err(|e| BenchError::io(path, e))
}

pub fn load_raw_tensor(path: impl AsRef<Path>) -> Result<ChannelTensor<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| BenchError::io(path, e))?;
    decode_raw_tensor(&bytes)
}

/// Loads a `.ppm` or `.sct` file, picking the decoder by extension.
pub fn load_tensor(path: impl AsRef<Path>) -> Result<ChannelTensor<f32>> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => load_ppm(path),
        _ => load_raw_tensor(path),
    }
}
