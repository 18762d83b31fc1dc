//! Scale/shift alignment of relative depth against sparse metric anchors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::types::{AffineParams, DepthRaster, SparseDepth};

/// `(relative, metric)` pairs at the anchors, in anchor order.
fn anchor_pairs(d_r: &DepthRaster, s: &SparseDepth) -> Result<Vec<(f64, f64)>> {
    if d_r.dims() != s.dims() {
        return Err(Error::Dimension(format!(
            "relative depth is {}x{} but anchors are for {}x{}",
            d_r.height(),
            d_r.width(),
            s.height(),
            s.width()
        )));
    }
    s.entries()
        .iter()
        .map(|e| {
            d_r.get(e.row, e.col)
                .map(|r| (r as f64, e.depth as f64))
                .ok_or(Error::InvalidAtAnchor { row: e.row, col: e.col })
        })
        .collect()
}

/// Least-squares `(alpha, beta)` minimizing `Σ (S_i − alpha·r_i − beta)²`
/// over the anchors.
pub fn global_affine_align(d_r: &DepthRaster, s: &SparseDepth) -> Result<AffineParams> {
    if s.len() < 2 {
        return Err(Error::TooFewAnchors { need: 2, got: s.len() });
    }
    let pairs = anchor_pairs(d_r, s)?;
    let first = pairs[0].0;
    if pairs.iter().all(|&(x, _)| x == first) {
        return Err(Error::SingularFit);
    }
    let n = pairs.len() as f64;
    let (sx, sy) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    // Centered normal equations: same minimizer, better conditioned.
    let (sxx, sxy) = pairs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        let dx = x - mx;
        (a + dx * dx, b + dx * (y - my))
    });
    if sxx <= 0.0 {
        return Err(Error::SingularFit);
    }
    let alpha = sxy / sxx;
    let beta = my - alpha * mx;
    AffineParams::new(alpha, beta)
}

/// `alpha·d + beta` on valid pixels; non-positive results become invalid.
pub fn apply_affine(d_r: &DepthRaster, p: &AffineParams) -> DepthRaster {
    let values = d_r
        .data()
        .iter()
        .zip(d_r.mask())
        .map(|(&v, &m)| m.then_some((p.alpha * v as f64 + p.beta) as f32));
    DepthRaster::from_options(d_r.height(), d_r.width(), values).expect("dims preserved")
}

/// Settings for [`lwlr_align`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LwlrConfig {
    /// Gaussian kernel standard deviation in pixels.
    pub bandwidth: f64,
    /// Pull of each local fit toward the global one.
    pub ridge: f64,
    /// Below this total kernel weight a pixel uses the global fit.
    pub min_effective_weight: f64,
}

impl LwlrConfig {
    /// Bandwidth `max(H, W)/8`, ridge `1e-3`, fallback threshold `1e-6`.
    pub fn for_dims(height: usize, width: usize) -> Self {
        Self {
            bandwidth: height.max(width) as f64 / 8.0,
            ridge: 1e-3,
            min_effective_weight: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) {
            return Err(Error::InvalidParam(format!("bandwidth must be > 0, got {}", self.bandwidth)));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::InvalidParam(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        if !(self.min_effective_weight >= 0.0) {
            return Err(Error::InvalidParam("min_effective_weight must be >= 0".into()));
        }
        Ok(())
    }
}

/// Per-pixel `(alpha, beta)` from a Gaussian-weighted, ridge-regularized
/// fit of the anchors.
///
/// At pixel `q` this minimizes
/// `Σ w_i(q)·(S_i − a·r_i − b)² + ridge·‖(a, b) − (alpha_g, beta_g)‖²`
/// with `w_i(q) = exp(−‖x_i − q‖² / (2·bandwidth²))`. Pixels whose total
/// weight falls below `min_effective_weight`, or whose local system is
/// singular, use the global fit.
pub fn lwlr_align(d_r: &DepthRaster, s: &SparseDepth, cfg: &LwlrConfig) -> Result<DepthRaster> {
    let params = lwlr_params(d_r, s, cfg)?;
    let values = params
        .iter()
        .zip(d_r.data())
        .map(|(p, &v)| p.map(|(a, b)| (a * v as f64 + b) as f32));
    DepthRaster::from_options(d_r.height(), d_r.width(), values)
}

/// The per-pixel `(scale, shift)` used by [`lwlr_align`]; `None` where the
/// relative depth is invalid.
pub fn lwlr_params(d_r: &DepthRaster, s: &SparseDepth, cfg: &LwlrConfig) -> Result<Vec<Option<(f64, f64)>>> {
    cfg.validate()?;
    let global = global_affine_align(d_r, s)?;
    let pairs = anchor_pairs(d_r, s)?;
    let anchors: Vec<(f64, f64, f64, f64)> = s
        .entries()
        .iter()
        .zip(&pairs)
        .map(|(e, &(x, y))| (e.row as f64, e.col as f64, x, y))
        .collect();

    let width = d_r.width();
    let mut out = vec![None; d_r.len()];
    par::for_each_row(&mut out, width, |r, row| {
        for (c, slot) in row.iter_mut().enumerate() {
            if d_r.is_valid(r, c) {
                *slot = Some(local_fit(&anchors, r as f64, c as f64, &global, cfg));
            }
        }
    });
    Ok(out)
}

fn local_fit(
    anchors: &[(f64, f64, f64, f64)],
    r: f64,
    c: f64,
    global: &AffineParams,
    cfg: &LwlrConfig,
) -> (f64, f64) {
    let inv_two_var = 1.0 / (2.0 * cfg.bandwidth * cfg.bandwidth);
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(ar, ac, x, y) in anchors {
        let d2 = (ar - r) * (ar - r) + (ac - c) * (ac - c);
        let w = (-d2 * inv_two_var).exp();
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
    }
    if sw < cfg.min_effective_weight {
        return (global.alpha, global.beta);
    }
    let a11 = swxx + cfg.ridge;
    let a12 = swx;
    let a22 = sw + cfg.ridge;
    let r1 = swxy + cfg.ridge * global.alpha;
    let r2 = swy + cfg.ridge * global.beta;
    let det = a11 * a22 - a12 * a12;
    if !(det > 0.0) {
        return (global.alpha, global.beta);
    }
    let a = (r1 * a22 - a12 * r2) / det;
    let b = (a11 * r2 - a12 * r1) / det;
    if a.is_finite() && b.is_finite() {
        (a, b)
    } else {
        (global.alpha, global.beta)
    }
}
