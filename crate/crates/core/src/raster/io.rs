//! Binary `FIMG` / `LIMG` image files and 8-bit PNG previews.
//!
//! Both binary formats are little-endian with a 4-byte magic, `u32` width
//! and height. `FIMG` then has `u32` channel count (always 4), the R, G, B,
//! D planes as row-major `f32`, and one coverage byte (0/1) per pixel.
//! `LIMG` has one label byte per pixel.

use std::fs;
use std::path::Path;

use super::{FaceImage, LabelImage, CHANNELS};
use crate::labels::NUM_CLASSES;
use crate::{Error, Result};

const FIMG_MAGIC: &[u8; 4] = b"FIMG";
const LIMG_MAGIC: &[u8; 4] = b"LIMG";

pub fn encode_face_image(img: &FaceImage) -> Vec<u8> {
    let n = img.width * img.height;
    let mut out = Vec::with_capacity(16 + n * (4 * CHANNELS + 1));
    out.extend_from_slice(FIMG_MAGIC);
    out.extend_from_slice(&(img.width as u32).to_le_bytes());
    out.extend_from_slice(&(img.height as u32).to_le_bytes());
    out.extend_from_slice(&(CHANNELS as u32).to_le_bytes());
    for plane in &img.channels {
        for v in plane {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend(img.coverage.iter().map(|&c| c as u8));
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::Format(format!("{}: truncated at byte {}", self.what, self.pos)));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<(usize, usize)> {
        if self.take(4)? != magic {
            return Err(Error::Format(format!(
                "{}: expected magic `{}`",
                self.what,
                String::from_utf8_lossy(magic)
            )));
        }
        let w = self.u32()? as usize;
        let h = self.u32()? as usize;
        if w == 0 || h == 0 {
            return Err(Error::Format(format!("{}: empty image {w}x{h}", self.what)));
        }
        Ok((w, h))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{}: {} trailing bytes",
                self.what,
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn decode_face_image(bytes: &[u8], what: &str) -> Result<FaceImage> {
    let mut r = Reader { bytes, pos: 0, what };
    let (width, height) = r.header(FIMG_MAGIC)?;
    let channels = r.u32()?;
    if channels as usize != CHANNELS {
        return Err(Error::Format(format!("{what}: {channels} channels, expected {CHANNELS}")));
    }
    let n = width
        .checked_mul(height)
        .filter(|n| n.checked_mul(4 * CHANNELS + 1).is_some())
        .ok_or_else(|| Error::Format(format!("{what}: image too large")))?;
    let mut planes: [Vec<f32>; CHANNELS] = Default::default();
    for plane in &mut planes {
        *plane = r
            .take(n * 4)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
    }
    let coverage = r
        .take(n)?
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(Error::Format(format!("{what}: coverage byte {b} is not 0 or 1"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    r.finish()?;
    FaceImage::from_parts(width, height, planes, coverage)
}

pub fn encode_label_image(img: &LabelImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + img.labels.len());
    out.extend_from_slice(LIMG_MAGIC);
    out.extend_from_slice(&(img.width as u32).to_le_bytes());
    out.extend_from_slice(&(img.height as u32).to_le_bytes());
    out.extend_from_slice(&img.labels);
    out
}

/// The file carries no coverage; every pixel of a decoded image counts as
/// covered.
pub fn decode_label_image(bytes: &[u8], what: &str) -> Result<LabelImage> {
    let mut r = Reader { bytes, pos: 0, what };
    let (width, height) = r.header(LIMG_MAGIC)?;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format(format!("{what}: image too large")))?;
    let labels = r.take(n)?.to_vec();
    r.finish()?;
    if let Some(bad) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
        return Err(Error::Format(format!("{what}: label {bad} is not in 0..{NUM_CLASSES}")));
    }
    Ok(LabelImage {
        width,
        height,
        labels,
        coverage: vec![true; n],
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_face_image(path: impl AsRef<Path>) -> Result<FaceImage> {
    let path = path.as_ref();
    decode_face_image(&read_bytes(path)?, &path.display().to_string())
}

pub fn write_face_image(img: &FaceImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_face_image(img)).map_err(|e| Error::io(path, e))
}

pub fn read_label_image(path: impl AsRef<Path>) -> Result<LabelImage> {
    let path = path.as_ref();
    decode_label_image(&read_bytes(path)?, &path.display().to_string())
}

pub fn write_label_image(img: &LabelImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_label_image(img)).map_err(|e| Error::io(path, e))
}

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn save_png(buf: image::DynamicImage, path: &Path) -> Result<()> {
    buf.save_with_format(path, image::ImageFormat::Png).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    })
}

/// 8-bit RGB preview of the color channels.
pub fn export_rgb_png(img: &FaceImage, path: impl AsRef<Path>) -> Result<()> {
    let data: Vec<u8> = (0..img.width * img.height)
        .flat_map(|i| [0, 1, 2].map(|c| to_u8(img.channels[c][i])))
        .collect();
    let buf = image::RgbImage::from_raw(img.width as u32, img.height as u32, data)
        .expect("buffer size matches dimensions");
    save_png(buf.into(), path.as_ref())
}

/// 8-bit grayscale preview of the depth channel.
pub fn export_depth_png(img: &FaceImage, path: impl AsRef<Path>) -> Result<()> {
    let data: Vec<u8> = img.channels[3].iter().map(|&v| to_u8(v)).collect();
    let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, data)
        .expect("buffer size matches dimensions");
    save_png(buf.into(), path.as_ref())
}
