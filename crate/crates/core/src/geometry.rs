//! Point maps: back-projection, normals, training losses and scale/shift
//! alignment for affine-invariant evaluation.
//!
//! Losses take the prediction first and the ground truth second. The mask
//! `M` they reduce over is the set of pixels valid in both maps, and the
//! `1/D̂` weights use the ground-truth depth (its z channel).

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::types::{CameraIntrinsics, DepthRaster, LossReduction, LossWeights, NormalMap, PointMap};

/// `P(r, c) = D(r, c) · ((c − cx)/fx, (r − cy)/fy, 1)`.
pub fn backproject(d: &DepthRaster, k: &CameraIntrinsics) -> PointMap {
    let (h, w) = d.dims();
    let mut xyz = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let z = d.data()[r * w + c];
            if !d.mask()[r * w + c] {
                xyz.push([0.0; 3]);
                continue;
            }
            let x = z as f64 * (c as f64 - k.cx) / k.fx;
            let y = z as f64 * (r as f64 - k.cy) / k.fy;
            xyz.push([x as f32, y as f32, z]);
        }
    }
    PointMap::new(h, w, xyz, d.mask().to_vec()).expect("valid depth gives valid points")
}

/// Depth is the z channel of the point map.
pub fn extract_z(p: &PointMap) -> DepthRaster {
    let data = p
        .points()
        .iter()
        .zip(p.mask())
        .map(|(q, &m)| if m { q[2] } else { 0.0 })
        .collect();
    DepthRaster::new(p.height(), p.width(), data, p.mask().to_vec()).expect("point map invariants")
}

fn sub(a: [f32; 3], b: [f32; 3]) -> [f64; 3] {
    [
        a[0] as f64 - b[0] as f64,
        a[1] as f64 - b[1] as f64,
        a[2] as f64 - b[2] as f64,
    ]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Central-difference normals, flipped to face the camera (`z ≤ 0`).
/// Border pixels, pixels with an invalid neighbour and degenerate stencils
/// are invalid.
pub fn estimate_normals(p: &PointMap) -> NormalMap {
    let (h, w) = p.dims();
    let mut n = vec![[0.0; 3]; h * w];
    let mut mask = vec![false; h * w];
    for r in 1..h.saturating_sub(1) {
        for c in 1..w.saturating_sub(1) {
            let (Some(left), Some(right), Some(up), Some(down), Some(_)) = (
                p.get(r, c - 1),
                p.get(r, c + 1),
                p.get(r - 1, c),
                p.get(r + 1, c),
                p.get(r, c),
            ) else {
                continue;
            };
            let v = cross(sub(right, left), sub(down, up));
            let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if !(len >= 1e-12) {
                continue;
            }
            let sign = if v[2] > 0.0 { -1.0 } else { 1.0 };
            n[r * w + c] = [sign * v[0] / len, sign * v[1] / len, sign * v[2] / len];
            mask[r * w + c] = true;
        }
    }
    NormalMap { height: h, width: w, n, mask }
}

fn check_pair(p: &PointMap, p_hat: &PointMap) -> Result<()> {
    if p.dims() != p_hat.dims() {
        return Err(Error::Dimension(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            p.height(),
            p.width(),
            p_hat.height(),
            p_hat.width()
        )));
    }
    Ok(())
}

fn joint_indices(p: &PointMap, p_hat: &PointMap) -> Vec<usize> {
    p.mask()
        .iter()
        .zip(p_hat.mask())
        .enumerate()
        .filter_map(|(i, (&a, &b))| (a && b).then_some(i))
        .collect()
}

/// `‖P_i − P̂_i‖₁ / D̂_i`
fn weighted_l1(p: &PointMap, p_hat: &PointMap, i: usize) -> f64 {
    let d = sub(p.points()[i], p_hat.points()[i]);
    (d[0].abs() + d[1].abs() + d[2].abs()) / p_hat.points()[i][2] as f64
}

fn reduce(sum: f64, count: usize, reduction: LossReduction) -> f64 {
    match reduction {
        LossReduction::Mean => sum / count as f64,
        LossReduction::Sum => sum,
    }
}

/// Depth-weighted L1 point error over the joint mask, averaged.
pub fn loss_global(p: &PointMap, p_hat: &PointMap) -> Result<f64> {
    loss_global_with(p, p_hat, LossReduction::Mean)
}

pub fn loss_global_with(p: &PointMap, p_hat: &PointMap, reduction: LossReduction) -> Result<f64> {
    check_pair(p, p_hat)?;
    let m = joint_indices(p, p_hat);
    if m.is_empty() {
        return Err(Error::NoValidPixels);
    }
    let sum: f64 = m.iter().map(|&i| weighted_l1(p, p_hat, i)).sum();
    Ok(reduce(sum, m.len(), reduction))
}

/// Depth-weighted L1 point error inside 3D spheres around random anchors.
///
/// `min(anchor_count, |M|)` anchors are drawn from `M` without replacement.
/// Sphere `j` holds the pixels whose ground-truth point lies strictly closer
/// than `radius_ratio · median ‖P̂‖` to anchor `j`; the loss averages over
/// all (anchor, member) pairs.
pub fn loss_local(p: &PointMap, p_hat: &PointMap, w: &LossWeights, seed: u64) -> Result<f64> {
    w.validate()?;
    check_pair(p, p_hat)?;
    let m = joint_indices(p, p_hat);
    if m.is_empty() {
        return Err(Error::NoValidPixels);
    }
    let gt = p_hat.points();
    let norm = |q: [f32; 3]| -> f64 {
        let (x, y, z) = (q[0] as f64, q[1] as f64, q[2] as f64);
        (x * x + y * y + z * z).sqrt()
    };
    let mut norms: Vec<f64> = m.iter().map(|&i| norm(gt[i])).collect();
    norms.sort_by(f64::total_cmp);
    let median = if norms.len() % 2 == 1 {
        norms[norms.len() / 2]
    } else {
        0.5 * (norms[norms.len() / 2 - 1] + norms[norms.len() / 2])
    };
    let radius = w.radius_ratio * median;

    let mut rng = rng::stream(seed, Stream::LossAnchors);
    let mut anchors: Vec<usize> = index::sample(&mut rng, m.len(), w.anchor_count.min(m.len()))
        .into_iter()
        .map(|k| m[k])
        .collect();
    anchors.sort_unstable();

    let (mut sum, mut pairs) = (0.0, 0usize);
    for &j in &anchors {
        for &i in &m {
            let d = sub(gt[i], gt[j]);
            if (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() < radius {
                sum += weighted_l1(p, p_hat, i);
                pairs += 1;
            }
        }
    }
    Ok(reduce(sum, pairs, w.reduction))
}

/// Mean angle between normals estimated from both maps, over pixels where
/// both normals exist.
pub fn loss_normal(p: &PointMap, p_hat: &PointMap) -> Result<f64> {
    loss_normal_with(p, p_hat, LossReduction::Mean)
}

pub fn loss_normal_with(p: &PointMap, p_hat: &PointMap, reduction: LossReduction) -> Result<f64> {
    check_pair(p, p_hat)?;
    let (n, n_hat) = (estimate_normals(p), estimate_normals(p_hat));
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..n.n.len() {
        if !(n.mask[i] && n_hat.mask[i]) {
            continue;
        }
        let (a, b) = (n.n[i], n_hat.n[i]);
        // atan2 stays accurate for nearly parallel normals, where acos does not
        let x = cross(a, b);
        let sin = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        sum += sin.atan2(cos);
        count += 1;
    }
    if count == 0 {
        return Err(Error::NoValidPixels);
    }
    Ok(reduce(sum, count, reduction))
}

/// The three loss terms and their weighted total.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossTerms {
    pub global: f64,
    pub local: f64,
    pub normal: f64,
    pub total: f64,
}

/// `global + λ_local·local + λ_normal·normal`.
pub fn total_loss(p: &PointMap, p_hat: &PointMap, w: &LossWeights, seed: u64) -> Result<f64> {
    loss_terms(p, p_hat, w, seed).map(|t| t.total)
}

pub fn loss_terms(p: &PointMap, p_hat: &PointMap, w: &LossWeights, seed: u64) -> Result<LossTerms> {
    let global = loss_global_with(p, p_hat, w.reduction)?;
    let local = loss_local(p, p_hat, w, seed)?;
    let normal = loss_normal_with(p, p_hat, w.reduction)?;
    Ok(LossTerms {
        global,
        local,
        normal,
        total: global + w.lambda_local * local + w.lambda_normal * normal,
    })
}

/// Scalar scale and 3-vector shift minimizing `Σ ‖P̂_i − a·P_i − b‖²` over
/// the joint mask.
///
/// Eliminating `b` from the 4×4 normal equations gives
/// `a = Σ (P_i − P̄)·(P̂_i − P̂̄) / Σ ‖P_i − P̄‖²` and `b = P̂̄ − a·P̄`.
pub fn affine_invariant_align(p: &PointMap, p_hat: &PointMap) -> Result<(f64, [f64; 3])> {
    check_pair(p, p_hat)?;
    let m = joint_indices(p, p_hat);
    if m.len() < 2 {
        return Err(Error::SingularAlignment);
    }
    let n = m.len() as f64;
    let mut mean_p = [0.0; 3];
    let mut mean_q = [0.0; 3];
    for &i in &m {
        for k in 0..3 {
            mean_p[k] += p.points()[i][k] as f64;
            mean_q[k] += p_hat.points()[i][k] as f64;
        }
    }
    for k in 0..3 {
        mean_p[k] /= n;
        mean_q[k] /= n;
    }
    let (mut spp, mut spq) = (0.0, 0.0);
    for &i in &m {
        for k in 0..3 {
            let dp = p.points()[i][k] as f64 - mean_p[k];
            let dq = p_hat.points()[i][k] as f64 - mean_q[k];
            spp += dp * dp;
            spq += dp * dq;
        }
    }
    if !(spp > 0.0) {
        return Err(Error::SingularAlignment);
    }
    let a = spq / spp;
    let b = [
        mean_q[0] - a * mean_p[0],
        mean_q[1] - a * mean_p[1],
        mean_q[2] - a * mean_p[2],
    ];
    Ok((a, b))
}
