//! Binary netpbm codecs: P6 color (maxval 255), P5 8-bit gray for masks and
//! label maps, P5 16-bit big-endian for depth in millimeters.

use std::fs;
use std::path::Path;

use super::{BitMask, DepthImage, Rgb8Image};
use crate::error::{Error, Result};

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::Format("missing netpbm magic".into()));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Format("truncated netpbm header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("expected a number in netpbm header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("header number overflow".into()))?;
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(Error::Format("missing whitespace after maxval".into()));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!(
            "bad netpbm header {width}x{height} maxval {maxval}"
        )));
    }
    Ok(Header {
        magic,
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        data_start: pos + 1,
    })
}

fn raster<'a>(bytes: &'a [u8], h: &Header, bytes_per_pixel: usize) -> Result<&'a [u8]> {
    let need = h.width * h.height * bytes_per_pixel;
    let data = &bytes[h.data_start..];
    if data.len() < need {
        return Err(Error::Format(format!(
            "raster truncated: {} of {need} bytes",
            data.len()
        )));
    }
    Ok(&data[..need])
}

fn with_header(magic: &str, w: usize, h: usize, maxval: u32, payload: &[u8]) -> Vec<u8> {
    let mut out = format!("{magic}\n{w} {h}\n{maxval}\n").into_bytes();
    out.extend_from_slice(payload);
    out
}

pub fn encode_ppm(img: &Rgb8Image) -> Vec<u8> {
    with_header("P6", img.width(), img.height(), 255, img.as_raw())
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Rgb8Image> {
    let h = parse_header(bytes)?;
    if &h.magic != b"P6" || h.maxval != 255 {
        return Err(Error::Format("expected P6 with maxval 255".into()));
    }
    Rgb8Image::from_raw(h.width, h.height, raster(bytes, &h, 3)?.to_vec())
}

pub fn encode_pgm8(w: usize, h: usize, samples: &[u8]) -> Vec<u8> {
    assert_eq!(samples.len(), w * h);
    with_header("P5", w, h, 255, samples)
}

/// Returns `(width, height, samples)`.
pub fn decode_pgm8(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let h = parse_header(bytes)?;
    if &h.magic != b"P5" || h.maxval > 255 {
        return Err(Error::Format("expected 8-bit P5".into()));
    }
    Ok((h.width, h.height, raster(bytes, &h, 1)?.to_vec()))
}

pub fn encode_pgm16(depth: &DepthImage) -> Vec<u8> {
    let mut payload = Vec::with_capacity(depth.as_raw().len() * 2);
    for &d in depth.as_raw() {
        payload.extend_from_slice(&d.to_be_bytes());
    }
    with_header("P5", depth.width(), depth.height(), 65535, &payload)
}

pub fn decode_pgm16(bytes: &[u8]) -> Result<DepthImage> {
    let h = parse_header(bytes)?;
    if &h.magic != b"P5" || h.maxval < 256 {
        return Err(Error::Format("expected 16-bit P5".into()));
    }
    let data = raster(bytes, &h, 2)?
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    DepthImage::from_raw(h.width, h.height, data)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Rgb8Image> {
    decode_ppm(&read(path.as_ref())?)
}

pub fn write_ppm(path: impl AsRef<Path>, img: &Rgb8Image) -> Result<()> {
    write(path.as_ref(), &encode_ppm(img))
}

pub fn read_depth(path: impl AsRef<Path>) -> Result<DepthImage> {
    decode_pgm16(&read(path.as_ref())?)
}

pub fn write_depth(path: impl AsRef<Path>, depth: &DepthImage) -> Result<()> {
    write(path.as_ref(), &encode_pgm16(depth))
}

pub fn read_pgm8(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>)> {
    decode_pgm8(&read(path.as_ref())?)
}

pub fn write_pgm8(path: impl AsRef<Path>, w: usize, h: usize, samples: &[u8]) -> Result<()> {
    write(path.as_ref(), &encode_pgm8(w, h, samples))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BitMask> {
    let (w, h, bytes) = read_pgm8(path)?;
    BitMask::from_bytes(w, h, &bytes)
}

pub fn write_mask(path: impl AsRef<Path>, m: &BitMask) -> Result<()> {
    write_pgm8(path, m.width(), m.height(), &m.to_bytes())
}
