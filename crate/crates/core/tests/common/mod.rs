#![allow(dead_code)]

use depthcomp::{DepthRaster, SparseDepth, SparseEntry};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dense(h: usize, w: usize, lo: f32, hi: f32, rng: &mut ChaCha8Rng) -> DepthRaster {
    DepthRaster::from_fn(h, w, |_, _| rng.random_range(lo..hi)).unwrap()
}

/// `count` distinct anchor pixels with depths read from `gt`.
pub fn anchors_from(gt: &DepthRaster, count: usize, rng: &mut ChaCha8Rng) -> SparseDepth {
    let (h, w) = gt.dims();
    let picks = rand::seq::index::sample(rng, h * w, count);
    let entries = picks
        .into_iter()
        .map(|i| SparseEntry { row: i / w, col: i % w, depth: gt.data()[i] })
        .collect();
    SparseDepth::new(h, w, entries).unwrap()
}

/// Explicit `(L + λ·MᵀM)` for a grid, built edge by edge.
pub fn dense_system(h: usize, w: usize, anchors: &SparseDepth, lambda: f64) -> DMatrix<f64> {
    let n = h * w;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut edge = |p: usize, q: usize| {
        a[(p, p)] += 1.0;
        a[(q, q)] += 1.0;
        a[(p, q)] -= 1.0;
        a[(q, p)] -= 1.0;
    };
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                edge(i, i + 1);
            }
            if r + 1 < h {
                edge(i, i + w);
            }
        }
    }
    for e in anchors.entries() {
        let i = e.row * w + e.col;
        a[(i, i)] += lambda;
    }
    a
}

/// Direct dense minimizer of the log-domain completion energy for target
/// gradients of `log(d_r + shift)`, returned as depth.
pub fn dense_completion(d_r: &DepthRaster, anchors: &SparseDepth, shift: f64, lambda: f64) -> Vec<f64> {
    let (h, w) = d_r.dims();
    let logs: Vec<f64> = d_r.data().iter().map(|&v| (v as f64 + shift).ln()).collect();
    let mut b = DVector::<f64>::zeros(h * w);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                let g = logs[i + 1] - logs[i];
                b[i] -= g;
                b[i + 1] += g;
            }
            if r + 1 < h {
                let g = logs[i + w] - logs[i];
                b[i] -= g;
                b[i + w] += g;
            }
        }
    }
    for e in anchors.entries() {
        b[e.row * w + e.col] += lambda * (e.depth as f64).ln();
    }
    let a = dense_system(h, w, anchors, lambda);
    let u = a.lu().solve(&b).expect("system is nonsingular");
    u.iter().map(|v| v.exp()).collect()
}

pub fn rel_error(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t).abs() / t.abs()).sum::<f64>() / truth.len() as f64
}

pub fn raster_rel(pred: &DepthRaster, truth: &DepthRaster) -> f64 {
    depthcomp::metrics::depth_metrics(pred, truth).unwrap().rel
}
