use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::types::{DepthRaster, PointMap};

/// Single-channel float image, rows stored top to bottom in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

/// Parses a grayscale PFM. Negative scale means little-endian samples; the
/// file stores rows bottom to top.
pub fn decode_pfm(bytes: &[u8]) -> Result<PfmImage> {
    let mut pos = 0;
    let mut next_line = || -> Result<&str> {
        let rest = &bytes[pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Pfm("truncated header".into()))?;
        pos += end + 1;
        std::str::from_utf8(&rest[..end])
            .map(str::trim)
            .map_err(|_| Error::Pfm("header is not ASCII".into()))
    };
    match next_line()? {
        "Pf" => {}
        "PF" => return Err(Error::ColorPfm),
        other => return Err(Error::Pfm(format!("unknown magic '{other}'"))),
    }
    let dims: Vec<usize> = next_line()?
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Pfm(format!("bad dimensions: {e}")))?;
    let [width, height] = dims[..] else {
        return Err(Error::Pfm("expected 'width height'".into()));
    };
    if width == 0 || height == 0 {
        return Err(Error::Pfm(format!("empty image {width}x{height}")));
    }
    let scale: f32 = next_line()?
        .parse()
        .map_err(|e| Error::Pfm(format!("bad scale: {e}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Pfm(format!("bad scale {scale}")));
    }
    let little = scale < 0.0;
    let payload = &bytes[pos..];
    let need = width * height * 4;
    if payload.len() < need {
        return Err(Error::Pfm(format!(
            "truncated payload: {} of {need} bytes",
            payload.len()
        )));
    }
    let mut data = vec![0.0f32; width * height];
    for (k, chunk) in payload[..need].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (file_row, col) = (k / width, k % width);
        data[(height - 1 - file_row) * width + col] = v;
    }
    Ok(PfmImage { width, height, data })
}

/// Little-endian PFM (scale −1.0).
pub fn encode_pfm(img: &PfmImage) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    out.reserve(img.data.len() * 4);
    for row in img.data.chunks(img.width).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_pfm_image(path: impl AsRef<Path>) -> Result<PfmImage> {
    decode_pfm(&fs::read(path)?)
}

pub fn write_pfm_image(path: impl AsRef<Path>, img: &PfmImage) -> Result<()> {
    fs::write(path, encode_pfm(img))?;
    Ok(())
}

/// Depth raster from PFM; non-finite and non-positive samples are invalid.
pub fn read_pfm(path: impl AsRef<Path>) -> Result<DepthRaster> {
    let img = read_pfm_image(path)?;
    DepthRaster::from_options(img.height, img.width, img.data.into_iter().map(Some))
}

/// Writes valid pixels as-is and invalid pixels as 0.
pub fn write_pfm(path: impl AsRef<Path>, r: &DepthRaster) -> Result<()> {
    let data = r
        .data()
        .iter()
        .zip(r.mask())
        .map(|(&v, &m)| if m { v } else { 0.0 })
        .collect();
    write_pfm_image(
        path,
        &PfmImage {
            width: r.width(),
            height: r.height(),
            data,
        },
    )
}

fn channel_path(prefix: &Path, channel: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!(".{channel}.pfm"));
    PathBuf::from(s)
}

/// Writes `PREFIX.x.pfm`, `PREFIX.y.pfm`, `PREFIX.z.pfm` and
/// `PREFIX.mask.pfm` (1 valid, 0 invalid).
pub fn write_point_map(prefix: impl AsRef<Path>, p: &PointMap) -> Result<()> {
    let prefix = prefix.as_ref();
    let (h, w) = p.dims();
    for (k, name) in ["x", "y", "z"].iter().enumerate() {
        let data = p
            .points()
            .iter()
            .zip(p.mask())
            .map(|(q, &m)| if m { q[k] } else { 0.0 })
            .collect();
        write_pfm_image(channel_path(prefix, name), &PfmImage { width: w, height: h, data })?;
    }
    let mask = p.mask().iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    write_pfm_image(channel_path(prefix, "mask"), &PfmImage { width: w, height: h, data: mask })
}

/// Reads the four files written by [`write_point_map`]. A pixel flagged
/// valid must have finite coordinates and positive z.
pub fn read_point_map(prefix: impl AsRef<Path>) -> Result<PointMap> {
    let prefix = prefix.as_ref();
    let [x, y, z, mask] = ["x", "y", "z", "mask"].map(|c| read_pfm_image(channel_path(prefix, c)));
    let (x, y, z, mask) = (x?, y?, z?, mask?);
    for img in [&y, &z, &mask] {
        if (img.width, img.height) != (x.width, x.height) {
            return Err(Error::Dimension(format!(
                "point map channels disagree: {}x{} vs {}x{}",
                x.height, x.width, img.height, img.width
            )));
        }
    }
    let xyz = (0..x.data.len()).map(|i| [x.data[i], y.data[i], z.data[i]]).collect();
    let valid = mask.data.iter().map(|&m| m >= 0.5).collect();
    PointMap::new(x.height, x.width, xyz, valid)
}
