//! Synthetic sparse observations drawn from dense ground truth.
//!
//! Every sampler is a pure function of its inputs and a 64-bit seed. Each
//! operation draws from its own ChaCha8 stream, so adding noise to a pattern
//! never perturbs which pixels were picked.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::backproject;
use crate::rng::{self, Stream};
use crate::types::{CameraIntrinsics, DepthRaster, SparseDepth, SparseEntry};

/// Densities used for uniformly random anchors.
pub const RANDOM_DENSITY_PRESETS: [f64; 4] = [0.01, 0.03, 0.05, 0.10];
/// Beam counts for simulated LiDAR.
pub const LIDAR_LINE_PRESETS: [usize; 3] = [64, 32, 16];
/// Points per frame for keypoint sampling.
pub const KEYPOINT_COUNT_PRESETS: [usize; 3] = [1500, 500, 150];
pub const DEFAULT_NOISE_SIGMA: f64 = 0.01;
/// Harris corner sensitivity.
pub const HARRIS_K: f64 = 0.05;

/// Which pattern to draw and its one size parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "lowercase")]
pub enum SamplePattern {
    Random { density: f64 },
    Keypoint { count: usize },
    Lidar { lines: usize },
}

impl SamplePattern {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Random { .. } => "random",
            Self::Keypoint { .. } => "keypoint",
            Self::Lidar { .. } => "lidar",
        }
    }
}

/// A fully resolved sampling request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    #[serde(flatten)]
    pub pattern: SamplePattern,
    /// Multiplicative noise standard deviation; 0 disables noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SampleSpec {
    pub fn validate(&self) -> Result<()> {
        match self.pattern {
            SamplePattern::Random { density } if !(density > 0.0 && density <= 1.0) => {
                return Err(Error::InvalidParam(format!("density must be in (0, 1], got {density}")));
            }
            SamplePattern::Keypoint { count: 0 } => {
                return Err(Error::InvalidParam("keypoint count must be >= 1".into()));
            }
            SamplePattern::Lidar { lines: 0 } => {
                return Err(Error::InvalidParam("lidar lines must be >= 1".into()));
            }
            _ => {}
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Anchors plus whether the sampler could not deliver what was asked.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    pub sparse: SparseDepth,
    pub warning: bool,
}

/// Runs the sampler named by `spec`, then adds noise.
///
/// Keypoint sampling needs `gray`, LiDAR sampling needs `intrinsics`.
pub fn sample(
    spec: &SampleSpec,
    gt: &DepthRaster,
    gray: Option<&DepthRaster>,
    intrinsics: Option<&CameraIntrinsics>,
) -> Result<Sampled> {
    spec.validate()?;
    let picked = match spec.pattern {
        SamplePattern::Random { density } => Sampled {
            sparse: sample_random(gt, density, spec.seed)?,
            warning: false,
        },
        SamplePattern::Keypoint { count } => {
            let gray = gray.ok_or_else(|| Error::InvalidParam("keypoint sampling needs an intensity image".into()))?;
            sample_keypoints(gray, gt, count, spec.seed)?
        }
        SamplePattern::Lidar { lines } => {
            let k = intrinsics.ok_or_else(|| Error::InvalidParam("lidar sampling needs camera intrinsics".into()))?;
            Sampled {
                sparse: sample_lidar(gt, k, lines, spec.seed)?,
                warning: false,
            }
        }
    };
    Ok(Sampled {
        sparse: add_noise(&picked.sparse, spec.noise_sigma, spec.seed)?,
        warning: picked.warning,
    })
}

fn valid_indices(gt: &DepthRaster) -> Vec<usize> {
    gt.mask()
        .iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i))
        .collect()
}

fn entries_at(gt: &DepthRaster, mut picks: Vec<usize>) -> Result<SparseDepth> {
    picks.sort_unstable();
    let w = gt.width();
    let entries = picks
        .into_iter()
        .map(|i| SparseEntry {
            row: i / w,
            col: i % w,
            depth: gt.data()[i],
        })
        .collect();
    SparseDepth::new(gt.height(), w, entries)
}

/// `round(density · #valid)` distinct valid pixels, at least one.
pub fn sample_random(gt: &DepthRaster, density: f64, seed: u64) -> Result<SparseDepth> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParam(format!("density must be in (0, 1], got {density}")));
    }
    let valid = valid_indices(gt);
    if valid.is_empty() {
        return Err(Error::NoValidPixels);
    }
    let want = ((density * valid.len() as f64).round() as usize).clamp(1, valid.len());
    let mut rng = rng::stream(seed, Stream::RandomPixels);
    let picks = index::sample(&mut rng, valid.len(), want)
        .into_iter()
        .map(|k| valid[k])
        .collect();
    entries_at(gt, picks)
}

/// Multiplies each depth by `1 + sigma·z`, `z ~ N(0, 1)`, clamped to at
/// least 1e-4 m. Draws follow the (row, col) order of the entries.
pub fn add_noise(s: &SparseDepth, sigma: f64, seed: u64) -> Result<SparseDepth> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParam(format!("noise sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(s.clone());
    }
    let mut rng = rng::stream(seed, Stream::Noise);
    let entries = s
        .entries()
        .iter()
        .map(|e| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let noisy = (e.depth as f64 * (1.0 + sigma * z)).max(1e-4);
            SparseEntry {
                depth: noisy as f32,
                ..*e
            }
        })
        .collect();
    SparseDepth::new(s.height(), s.width(), entries)
}

/// Harris corner response `det(M) − k·tr(M)²` of an intensity image.
///
/// Gradients are central differences with edge clamping; the structure
/// tensor is smoothed with the separable 3×3 kernel `[1 2 1]/4`.
pub fn harris_response(gray: &DepthRaster) -> Vec<f64> {
    let (h, w) = gray.dims();
    let at = |r: isize, c: isize| -> f64 {
        let r = r.clamp(0, h as isize - 1) as usize;
        let c = c.clamp(0, w as isize - 1) as usize;
        gray.data()[r * w + c] as f64
    };
    let n = h * w;
    let (mut ixx, mut iyy, mut ixy) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for r in 0..h as isize {
        for c in 0..w as isize {
            let gx = 0.5 * (at(r, c + 1) - at(r, c - 1));
            let gy = 0.5 * (at(r + 1, c) - at(r - 1, c));
            let i = r as usize * w + c as usize;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }
    let (sxx, syy, sxy) = (smooth3(&ixx, h, w), smooth3(&iyy, h, w), smooth3(&ixy, h, w));
    (0..n)
        .map(|i| {
            let det = sxx[i] * syy[i] - sxy[i] * sxy[i];
            let tr = sxx[i] + syy[i];
            det - HARRIS_K * tr * tr
        })
        .collect()
}

fn smooth3(src: &[f64], h: usize, w: usize) -> Vec<f64> {
    const K: [f64; 3] = [0.25, 0.5, 0.25];
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            tmp[r * w + c] = (0..3)
                .map(|k| K[k] * src[r * w + clamp(c as isize + k as isize - 1, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            out[r * w + c] = (0..3)
                .map(|k| K[k] * tmp[clamp(r as isize + k as isize - 1, h) * w + c])
                .sum();
        }
    }
    out
}

/// Depths at the strongest corners of `gray`.
///
/// Candidates are pixels with a positive Harris response that are maximal
/// in their 3×3 neighbourhood and valid in `gt`, ranked by response with
/// seeded random tie-breaking. If fewer than `count` survive, the warning is
/// set and the rest is filled with seeded random valid pixels; a textureless
/// image therefore degrades to random sampling.
pub fn sample_keypoints(gray: &DepthRaster, gt: &DepthRaster, count: usize, seed: u64) -> Result<Sampled> {
    if gray.dims() != gt.dims() {
        return Err(Error::Dimension(format!(
            "intensity image is {}x{} but ground truth is {}x{}",
            gray.height(),
            gray.width(),
            gt.height(),
            gt.width()
        )));
    }
    if count == 0 {
        return Err(Error::InvalidParam("keypoint count must be >= 1".into()));
    }
    let valid = valid_indices(gt);
    if valid.is_empty() {
        return Err(Error::NoValidPixels);
    }
    let (h, w) = gt.dims();
    let response = harris_response(gray);
    let mut tie_rng = rng::stream(seed, Stream::KeypointTies);
    let mut candidates: Vec<(f64, u64, usize)> = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let score = response[i];
            // one tie key per pixel, drawn in raster order
            let tie: u64 = tie_rng.random();
            if !(score > 0.0) || !gt.mask()[i] {
                continue;
            }
            let is_peak = (r.saturating_sub(1)..=(r + 1).min(h - 1))
                .flat_map(|rr| (c.saturating_sub(1)..=(c + 1).min(w - 1)).map(move |cc| rr * w + cc))
                .all(|j| response[j] <= score);
            if is_peak {
                candidates.push((score, tie, i));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut picks: Vec<usize> = candidates.iter().take(count).map(|&(_, _, i)| i).collect();
    let warning = picks.len() < count;
    if warning {
        let taken: std::collections::HashSet<usize> = picks.iter().copied().collect();
        let rest: Vec<usize> = valid.into_iter().filter(|i| !taken.contains(i)).collect();
        let fill = (count - picks.len()).min(rest.len());
        let mut rng = rng::stream(seed, Stream::KeypointFill);
        picks.extend(index::sample(&mut rng, rest.len(), fill).into_iter().map(|k| rest[k]));
    }
    Ok(Sampled {
        sparse: entries_at(gt, picks)?,
        warning,
    })
}

/// Elevation angle `atan2(y, sqrt(x² + z²))` of each valid pixel's point.
pub fn elevation_angles(gt: &DepthRaster, k: &CameraIntrinsics) -> Vec<Option<f64>> {
    let points = backproject(gt, k);
    points
        .points()
        .iter()
        .zip(points.mask())
        .map(|(p, &m)| {
            m.then(|| {
                let (x, y, z) = (p[0] as f64, p[1] as f64, p[2] as f64);
                y.atan2((x * x + z * z).sqrt())
            })
        })
        .collect()
}

/// Simulated scanning LiDAR with `lines` beams.
///
/// The elevation range of the valid pixels is split into `lines` equal bins;
/// a pixel is kept when it lies within an eighth of a bin width of its bin
/// centre. Each beam keeps at most `width` pixels, subsampled with the seed.
pub fn sample_lidar(gt: &DepthRaster, k: &CameraIntrinsics, lines: usize, seed: u64) -> Result<SparseDepth> {
    if lines == 0 {
        return Err(Error::InvalidParam("lidar lines must be >= 1".into()));
    }
    let angles = elevation_angles(gt, k);
    let (lo, hi) = angles
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if lo > hi {
        return Err(Error::NoValidPixels);
    }
    let bin = (hi - lo) / lines as f64;
    let half_band = bin / 8.0;
    let mut beams: Vec<Vec<usize>> = vec![Vec::new(); lines];
    for (i, e) in angles.iter().enumerate() {
        let Some(e) = *e else { continue };
        let b = if bin > 0.0 {
            (((e - lo) / bin).floor() as usize).min(lines - 1)
        } else {
            0
        };
        let centre = lo + (b as f64 + 0.5) * bin;
        if (e - centre).abs() <= half_band {
            beams[b].push(i);
        }
    }
    let cap = gt.width();
    let mut rng = rng::stream(seed, Stream::LidarCap);
    let mut picks = Vec::new();
    for beam in beams {
        if beam.len() > cap {
            picks.extend(index::sample(&mut rng, beam.len(), cap).into_iter().map(|k| beam[k]));
        } else {
            picks.extend(beam);
        }
    }
    entries_at(gt, picks)
}
