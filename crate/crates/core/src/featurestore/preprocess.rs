//! Pixel preprocessing applied before feature extraction.

use crate::error::{Error, Result};

pub const TARGET_SIZE: usize = 512;

/// An 8-bit interleaved RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// Turns encoded bytes (JPEG, PNG, ...) into pixels. Codecs live outside
/// this crate; callers plug in whichever decoder they already use.
pub trait ImageDecoder {
    fn decode(&self, bytes: &[u8]) -> Result<RgbImage>;
}

/// Decoder for binary PPM (`P6`, maxval 255).
#[derive(Debug, Default, Clone, Copy)]
pub struct PpmDecoder;

impl ImageDecoder for PpmDecoder {
    fn decode(&self, bytes: &[u8]) -> Result<RgbImage> {
        let bad = |m: &str| Error::InvalidImage(format!("PPM: {m}"));
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header"))?);
        }
        if fields[0] != "P6" {
            return Err(bad("not a P6 file"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
        let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        if maxval != 255 {
            return Err(bad("only maxval 255 is supported"));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let need = width * height * 3;
        if bytes.len() < pos + need {
            return Err(bad("truncated raster"));
        }
        Ok(RgbImage {
            width,
            height,
            pixels: bytes[pos..pos + need].to_vec(),
        })
    }
}

/// Bilinear resize to 512x512 followed by division by 255.
///
/// Output is interleaved RGB, row-major, every value in `[0, 1]`.
pub fn resize_normalize(pixels: &[u8], width: usize, height: usize) -> Result<Vec<f32>> {
    resize_normalize_to(pixels, width, height, TARGET_SIZE, TARGET_SIZE)
}

pub fn resize_normalize_to(
    pixels: &[u8],
    width: usize,
    height: usize,
    out_width: usize,
    out_height: usize,
) -> Result<Vec<f32>> {
    if pixels.is_empty() {
        return Err(Error::InvalidImage("empty buffer".into()));
    }
    if width == 0 || height == 0 || out_width == 0 || out_height == 0 {
        return Err(Error::InvalidImage("width and height must be at least 1".into()));
    }
    if pixels.len() != width * height * 3 {
        return Err(Error::InvalidImage(format!(
            "buffer holds {} bytes, {width}x{height} RGB needs {}",
            pixels.len(),
            width * height * 3
        )));
    }

    // Pixel centres are aligned (half-pixel offset), edges clamp.
    let x_taps: Vec<_> = (0..out_width).map(|x| taps(x, width, out_width)).collect();
    let y_taps: Vec<_> = (0..out_height).map(|y| taps(y, height, out_height)).collect();

    let at = |x: usize, y: usize, c: usize| f64::from(pixels[(y * width + x) * 3 + c]);
    let mut out = Vec::with_capacity(out_width * out_height * 3);
    for &(y0, y1, fy) in &y_taps {
        for &(x0, x1, fx) in &x_taps {
            for c in 0..3 {
                let top = at(x0, y0, c) * (1.0 - fx) + at(x1, y0, c) * fx;
                let bottom = at(x0, y1, c) * (1.0 - fx) + at(x1, y1, c) * fx;
                let v = (top * (1.0 - fy) + bottom * fy) / 255.0;
                out.push(v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    Ok(out)
}

fn taps(dst: usize, src_len: usize, dst_len: usize) -> (usize, usize, f64) {
    let scale = src_len as f64 / dst_len as f64;
    let src = ((dst as f64 + 0.5) * scale - 0.5).max(0.0);
    let i0 = (src.floor() as usize).min(src_len - 1);
    let i1 = (i0 + 1).min(src_len - 1);
    let frac = if i1 == i0 { 0.0 } else { src - i0 as f64 };
    (i0, i1, frac)
}
