//! Depth and point-map error metrics, and mean ranking across methods.
//!
//! Metrics take the prediction first and the ground truth second and reduce
//! over pixels valid in both, row-major, in `f64`. Relative errors divide by
//! the ground truth. Both threshold tests are strict: a ratio of exactly
//! 1.25, or a distance of exactly a quarter of the smaller norm, fails.

use serde::{Deserialize, Serialize};

use crate::align::{apply_affine, global_affine_align};
use crate::error::{Error, Result};
use crate::types::{DepthRaster, PointMap, SparseDepth};

pub const DELTA1_RATIO: f64 = 1.25;
pub const DELTA1_POINT_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub rel: f64,
    pub delta1: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub rmse_p: f64,
    pub mae_p: f64,
    pub rel_p: f64,
    pub delta1_p: f64,
    pub count: usize,
}

pub fn depth_metrics(pred: &DepthRaster, gt: &DepthRaster) -> Result<DepthMetrics> {
    if pred.dims() != gt.dims() {
        return Err(Error::Dimension(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width()
        )));
    }
    let (mut se, mut ae, mut re, mut hits, mut n) = (0.0f64, 0.0f64, 0.0f64, 0usize, 0usize);
    for i in 0..gt.len() {
        if !(pred.mask()[i] && gt.mask()[i]) {
            continue;
        }
        let d = pred.data()[i] as f64;
        let g = gt.data()[i] as f64;
        let err = (d - g).abs();
        se += err * err;
        ae += err;
        re += err / g;
        if (g / d).max(d / g) < DELTA1_RATIO {
            hits += 1;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoValidPixels);
    }
    let count = n as f64;
    Ok(DepthMetrics {
        rmse: (se / count).sqrt(),
        mae: ae / count,
        rel: re / count,
        delta1: hits as f64 / count,
        count: n,
    })
}

pub fn point_metrics(pred: &PointMap, gt: &PointMap) -> Result<PointMetrics> {
    if pred.dims() != gt.dims() {
        return Err(Error::Dimension(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width()
        )));
    }
    let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let widen = |q: [f32; 3]| [q[0] as f64, q[1] as f64, q[2] as f64];
    let (mut se, mut ae, mut re, mut hits, mut n) = (0.0f64, 0.0f64, 0.0f64, 0usize, 0usize);
    for i in 0..gt.points().len() {
        if !(pred.mask()[i] && gt.mask()[i]) {
            continue;
        }
        let p = widen(pred.points()[i]);
        let g = widen(gt.points()[i]);
        let dist = norm([g[0] - p[0], g[1] - p[1], g[2] - p[2]]);
        let (np, ng) = (norm(p), norm(g));
        se += dist * dist;
        ae += dist;
        re += dist / ng;
        if dist < DELTA1_POINT_FRACTION * np.min(ng) {
            hits += 1;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoValidPixels);
    }
    let count = n as f64;
    Ok(PointMetrics {
        rmse_p: (se / count).sqrt(),
        mae_p: ae / count,
        rel_p: re / count,
        delta1_p: hits as f64 / count,
        count: n,
    })
}

/// Metric depth for a relative-depth prediction: global scale/shift fitted
/// to the anchors, then applied.
pub fn recover_metric(pred_rel: &DepthRaster, s: &SparseDepth) -> Result<DepthRaster> {
    let params = global_affine_align(pred_rel, s)?;
    Ok(apply_affine(pred_rel, &params))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    LowerIsBetter,
    HigherIsBetter,
}

/// One column of a comparison table: a value per method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCell {
    pub name: String,
    pub direction: Direction,
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub methods: Vec<String>,
    pub cells: Vec<String>,
    /// `ranks[m][c]`: rank of method `m` in cell `c`, 1 = best.
    pub ranks: Vec<Vec<f64>>,
    pub mean_rank: Vec<f64>,
}

/// Ranks methods per cell (ties share the average of their positions) and
/// averages over cells.
pub fn aggregate_ranking(methods: &[String], cells: &[RankCell]) -> Result<Ranking> {
    if methods.is_empty() || cells.is_empty() {
        return Err(Error::Ranking("need at least one method and one cell".into()));
    }
    let mut ranks = vec![vec![0.0; cells.len()]; methods.len()];
    for (ci, cell) in cells.iter().enumerate() {
        if cell.values.len() != methods.len() {
            return Err(Error::Ranking(format!(
                "cell '{}' has {} values for {} methods",
                cell.name,
                cell.values.len(),
                methods.len()
            )));
        }
        let mut values = Vec::with_capacity(methods.len());
        for (m, v) in cell.values.iter().enumerate() {
            match v {
                None => {
                    return Err(Error::Ranking(format!(
                        "missing value for '{}' in cell '{}'",
                        methods[m], cell.name
                    )))
                }
                Some(v) if !v.is_finite() => {
                    return Err(Error::Ranking(format!(
                        "non-finite value for '{}' in cell '{}'",
                        methods[m], cell.name
                    )))
                }
                Some(v) => values.push(match cell.direction {
                    Direction::LowerIsBetter => *v,
                    Direction::HigherIsBetter => -*v,
                }),
            }
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len() && values[order[end]] == values[order[start]] {
                end += 1;
            }
            // positions start+1 ..= end share their mean
            let shared = (start + 1 + end) as f64 / 2.0;
            for &m in &order[start..end] {
                ranks[m][ci] = shared;
            }
            start = end;
        }
    }
    let mean_rank = ranks
        .iter()
        .map(|r| r.iter().sum::<f64>() / cells.len() as f64)
        .collect();
    Ok(Ranking {
        methods: methods.to_vec(),
        cells: cells.iter().map(|c| c.name.clone()).collect(),
        ranks,
        mean_rank,
    })
}
