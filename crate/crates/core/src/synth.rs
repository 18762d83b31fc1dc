//! Seeded synthetic scenes for tests, benchmarks and the browser demo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::types::{CameraIntrinsics, DepthRaster};

/// Smooth positive depth in meters: a tilted base plane plus a handful of
/// Gaussian bumps and dents. Values stay within roughly 1–12 m.
pub fn smooth_depth(height: usize, width: usize, seed: u64) -> DepthRaster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = rng.random_range(2.0..4.0);
    let tilt_r = rng.random_range(-2.0..3.0);
    let tilt_c = rng.random_range(-1.5..1.5);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..5)
        .map(|_| {
            let amp = rng.random_range(0.3..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.08..0.3),
                amp,
            )
        })
        .collect();
    let (hf, wf) = ((height.max(2) - 1) as f64, (width.max(2) - 1) as f64);
    DepthRaster::from_fn(height, width, |r, c| {
        let (y, x) = (r as f64 / hf, c as f64 / wf);
        let mut d = base + tilt_r * y + tilt_c * (x - 0.5);
        for &(by, bx, s, a) in &bumps {
            let q = ((y - by).powi(2) + (x - bx).powi(2)) / (2.0 * s * s);
            d += a * (-q).exp();
        }
        d.max(0.8) as f32
    })
    .expect("scene values are positive")
}

/// How a relative depth map is derived from metric ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Distortion {
    /// `(d − beta) / alpha`
    Affine { alpha: f64, beta: f64 },
    Sqrt,
    CubeRoot,
}

pub fn relative_from(gt: &DepthRaster, distortion: Distortion) -> DepthRaster {
    gt.map_valid(|d| {
        let d = d as f64;
        (match distortion {
            Distortion::Affine { alpha, beta } => (d - beta) / alpha,
            Distortion::Sqrt => d.sqrt(),
            Distortion::CubeRoot => d.cbrt(),
        }) as f32
    })
}

/// Piecewise-constant texture of random rectangles on a depth-shaded
/// background, in [0, 1]. Rectangle corners give keypoint detectors
/// something to find.
pub fn intensity(depth: &DepthRaster, seed: u64) -> DepthRaster {
    let (h, w) = depth.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let rects: Vec<(usize, usize, usize, usize, f32)> = (0..12)
        .map(|_| {
            let r0 = rng.random_range(0..h);
            let c0 = rng.random_range(0..w);
            let r1 = (r0 + rng.random_range(2..=(h / 3).max(3))).min(h);
            let c1 = (c0 + rng.random_range(2..=(w / 3).max(3))).min(w);
            (r0, r1, c0, c1, rng.random_range(0.0..1.0))
        })
        .collect();
    DepthRaster::from_fn(h, w, |r, c| {
        let mut v = 0.2 + 0.05 * depth.data()[r * w + c];
        for &(r0, r1, c0, c1, level) in &rects {
            if (r0..r1).contains(&r) && (c0..c1).contains(&c) {
                v = level;
            }
        }
        v.clamp(0.01, 1.0)
    })
    .expect("intensities are positive")
}

/// Intrinsics with a ~60° horizontal field of view centred on the image.
pub fn default_intrinsics(height: usize, width: usize) -> CameraIntrinsics {
    let f = width as f64 / (2.0 * (30f64).to_radians().tan());
    CameraIntrinsics::new(f, f, (width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0)
        .expect("positive focal length")
}
