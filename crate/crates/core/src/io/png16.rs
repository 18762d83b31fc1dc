use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::DepthRaster;

/// Largest storable depth in meters.
const MAX_METERS: f64 = 65.535;

/// Reads a 16-bit single-channel PNG of millimeters; 0 is invalid.
pub fn read_png16(path: impl AsRef<Path>) -> Result<DepthRaster> {
    let decoder = png::Decoder::new(BufReader::new(File::open(path)?));
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::Png(format!(
            "expected 16-bit single-channel image, got {:?} at {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| Error::Png(e.to_string()))?;
    let stride = frame.line_size;
    let mut values = Vec::with_capacity(width * height);
    for r in 0..height {
        let line = &buf[r * stride..r * stride + width * 2];
        for px in line.chunks_exact(2) {
            let mm = u16::from_be_bytes([px[0], px[1]]);
            values.push((mm != 0).then(|| mm as f32 / 1000.0));
        }
    }
    DepthRaster::from_options(height, width, values)
}

/// Writes `round(depth · 1000)` as 16-bit grayscale. Returns how many
/// valid pixels could not be represented (deeper than 65.535 m, or
/// rounding to the 0 sentinel) and were written as invalid.
pub fn write_png16(path: impl AsRef<Path>, r: &DepthRaster) -> Result<usize> {
    let mut dropped = 0;
    let mut bytes = Vec::with_capacity(r.len() * 2);
    for (&v, &m) in r.data().iter().zip(r.mask()) {
        let mm = if !m {
            0
        } else if v as f64 > MAX_METERS {
            dropped += 1;
            0
        } else {
            let mm = (v as f64 * 1000.0).round() as u16;
            if mm == 0 {
                dropped += 1;
            }
            mm
        };
        bytes.extend_from_slice(&mm.to_be_bytes());
    }
    let file = BufWriter::new(File::create(path)?);
    let mut encoder = png::Encoder::new(file, r.width() as u32, r.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let mut writer = encoder.write_header().map_err(|e| Error::Png(e.to_string()))?;
    writer
        .write_image_data(&bytes)
        .map_err(|e| Error::Png(e.to_string()))?;
    writer.finish().map_err(|e| Error::Png(e.to_string()))?;
    Ok(dropped)
}
