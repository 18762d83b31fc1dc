//! Rasters, sparse observations, point maps and the configuration records
//! shared by every stage.
//!
//! Validity is carried by an explicit mask. Values at masked-out pixels are
//! never read, so they may hold anything; constructors in this crate store
//! `0.0` there. All depths are meters unless a raster is documented as
//! relative (for example the output of a monocular model).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `height × width` depth grid, row-major, with a validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthRaster {
    height: usize,
    width: usize,
    data: Vec<f32>,
    mask: Vec<bool>,
}

impl DepthRaster {
    /// Builds a raster and checks every invariant.
    pub fn new(height: usize, width: usize, data: Vec<f32>, mask: Vec<bool>) -> Result<Self> {
        let raster = Self::from_raw(height, width, data, mask)?;
        validate_raster(&raster)?;
        Ok(raster)
    }

    /// Builds a raster, checking only that the buffers have the right length.
    /// Use [`validate_raster`] before handing it to anything that reads values.
    pub fn from_raw(height: usize, width: usize, data: Vec<f32>, mask: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "raster must be non-empty, got {height}x{width}"
            )));
        }
        let n = height * width;
        if data.len() != n || mask.len() != n {
            return Err(Error::Dimension(format!(
                "{height}x{width} raster needs {n} values, got data {} and mask {}",
                data.len(),
                mask.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
            mask,
        })
    }

    /// Fully valid raster.
    pub fn from_dense(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        let mask = vec![true; data.len()];
        Self::new(height, width, data, mask)
    }

    /// Fully valid raster from a per-pixel function of `(row, col)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::from_dense(height, width, data)
    }

    /// Raster with every pixel invalid.
    pub fn invalid(height: usize, width: usize) -> Result<Self> {
        Self::from_raw(height, width, vec![0.0; height * width], vec![false; height * width])
    }

    /// Builds a raster from optional per-pixel values; `None`, non-finite and
    /// non-positive values become invalid pixels.
    pub fn from_options(height: usize, width: usize, values: impl IntoIterator<Item = Option<f32>>) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        let mut mask = Vec::with_capacity(height * width);
        for v in values {
            match v {
                Some(v) if v.is_finite() && v > 0.0 => {
                    data.push(v);
                    mask.push(true);
                }
                _ => {
                    data.push(0.0);
                    mask.push(false);
                }
            }
        }
        Self::from_raw(height, width, data, mask)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    /// Value at `(row, col)` if the pixel is valid.
    pub fn get(&self, row: usize, col: usize) -> Option<f32> {
        let i = self.index(row, col);
        self.mask[i].then_some(self.data[i])
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.mask[self.index(row, col)]
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_dense(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// First invalid pixel in row-major order.
    pub fn first_invalid(&self) -> Option<(usize, usize)> {
        self.mask
            .iter()
            .position(|&m| !m)
            .map(|i| (i / self.width, i % self.width))
    }

    /// `(row, col, value)` for every valid pixel, row-major.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f32)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .zip(&self.mask)
            .enumerate()
            .filter(|(_, (_, &m))| m)
            .map(move |(i, (&v, _))| (i / w, i % w, v))
    }

    /// Applies `f` to every valid value; results that are not finite and
    /// positive become invalid.
    pub fn map_valid(&self, f: impl Fn(f32) -> f32) -> Self {
        let values = self
            .data
            .iter()
            .zip(&self.mask)
            .map(|(&v, &m)| m.then(|| f(v)));
        Self::from_options(self.height, self.width, values).expect("dims preserved")
    }

    pub fn into_parts(self) -> (usize, usize, Vec<f32>, Vec<bool>) {
        (self.height, self.width, self.data, self.mask)
    }
}

/// Checks every [`DepthRaster`] invariant. Invalid pixels are not inspected.
pub fn validate_raster(r: &DepthRaster) -> Result<()> {
    let n = r.height * r.width;
    if r.data.len() != n || r.mask.len() != n {
        return Err(Error::Dimension(format!(
            "{}x{} raster with data {} and mask {}",
            r.height,
            r.width,
            r.data.len(),
            r.mask.len()
        )));
    }
    for (i, (&v, &m)) in r.data.iter().zip(&r.mask).enumerate() {
        if !m {
            continue;
        }
        let (row, col) = (i / r.width, i % r.width);
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
        if v <= 0.0 {
            return Err(Error::NonPositive { row, col });
        }
    }
    Ok(())
}

/// One metric depth observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseEntry {
    pub row: usize,
    pub col: usize,
    pub depth: f32,
}

/// Sparse metric anchors over a `height × width` image.
///
/// Entries are kept sorted by `(row, col)`, so every reduction over them is
/// independent of the order they were supplied in.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDepth {
    height: usize,
    width: usize,
    entries: Vec<SparseEntry>,
}

impl SparseDepth {
    pub fn new(height: usize, width: usize, mut entries: Vec<SparseEntry>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "sparse source must be non-empty, got {height}x{width}"
            )));
        }
        for e in &entries {
            if e.row >= height || e.col >= width {
                return Err(Error::OutOfBounds {
                    row: e.row,
                    col: e.col,
                    height,
                    width,
                });
            }
            if !e.depth.is_finite() || e.depth <= 0.0 {
                return Err(Error::InvalidDepth {
                    row: e.row,
                    col: e.col,
                    depth: e.depth,
                });
            }
        }
        entries.sort_by_key(|e| (e.row, e.col));
        if let Some(pair) = entries
            .windows(2)
            .find(|p| (p[0].row, p[0].col) == (p[1].row, p[1].col))
        {
            return Err(Error::DuplicatePixel {
                row: pair[0].row,
                col: pair[0].col,
            });
        }
        Ok(Self {
            height,
            width,
            entries,
        })
    }

    /// Every valid pixel of a raster as an anchor.
    pub fn from_raster(r: &DepthRaster) -> Self {
        let entries = r
            .iter_valid()
            .map(|(row, col, depth)| SparseEntry { row, col, depth })
            .collect();
        Self {
            height: r.height(),
            width: r.width(),
            entries,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn entries(&self) -> &[SparseEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Same pixels with every depth multiplied by `s`.
    pub fn scaled(&self, s: f32) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| SparseEntry {
                depth: e.depth * s,
                ..*e
            })
            .collect();
        Self::new(self.height, self.width, entries)
    }
}

/// Rasterizes anchors: valid exactly at the entry pixels.
pub fn sparse_to_raster(s: &SparseDepth) -> DepthRaster {
    let n = s.height * s.width;
    let mut data = vec![0.0; n];
    let mut mask = vec![false; n];
    for e in &s.entries {
        let i = e.row * s.width + e.col;
        data[i] = e.depth;
        mask[i] = true;
    }
    DepthRaster {
        height: s.height,
        width: s.width,
        data,
        mask,
    }
}

/// Forward-difference log-depth gradients.
///
/// `gx[r*w + c]` is `log d(r, c+1) - log d(r, c)` and is zero (and excluded
/// from any energy) on the last column; `gy` is the same along rows and is
/// zero on the last row.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub height: usize,
    pub width: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    /// Pixels whose shifted value had to be raised to the positivity floor.
    pub floored: usize,
}

/// Camera-frame point per pixel, +z forward.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMap {
    height: usize,
    width: usize,
    xyz: Vec<[f32; 3]>,
    mask: Vec<bool>,
}

impl PointMap {
    pub fn new(height: usize, width: usize, xyz: Vec<[f32; 3]>, mask: Vec<bool>) -> Result<Self> {
        let n = height * width;
        if height == 0 || width == 0 || xyz.len() != n || mask.len() != n {
            return Err(Error::Dimension(format!(
                "{height}x{width} point map with {} points and {} mask entries",
                xyz.len(),
                mask.len()
            )));
        }
        for (i, (p, &m)) in xyz.iter().zip(&mask).enumerate() {
            if !m {
                continue;
            }
            let (row, col) = (i / width, i % width);
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { row, col });
            }
            if p[2] <= 0.0 {
                return Err(Error::NonPositive { row, col });
            }
        }
        Ok(Self {
            height,
            width,
            xyz,
            mask,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn points(&self) -> &[[f32; 3]] {
        &self.xyz
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, row: usize, col: usize) -> Option<[f32; 3]> {
        let i = row * self.width + col;
        self.mask[i].then_some(self.xyz[i])
    }

    /// Applies `p ↦ scale·p + shift` to every valid point; points that end
    /// up behind the camera or non-finite become invalid.
    pub fn transformed(&self, scale: f64, shift: [f64; 3]) -> Self {
        let mut xyz = Vec::with_capacity(self.xyz.len());
        let mut mask = Vec::with_capacity(self.xyz.len());
        for (p, &m) in self.xyz.iter().zip(&self.mask) {
            let q = [
                (scale * p[0] as f64 + shift[0]) as f32,
                (scale * p[1] as f64 + shift[1]) as f32,
                (scale * p[2] as f64 + shift[2]) as f32,
            ];
            let ok = m && q.iter().all(|v| v.is_finite()) && q[2] > 0.0;
            xyz.push(if ok { q } else { [0.0; 3] });
            mask.push(ok);
        }
        Self {
            height: self.height,
            width: self.width,
            xyz,
            mask,
        }
    }
}

/// Unit surface normals per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap {
    pub height: usize,
    pub width: usize,
    pub n: Vec<[f64; 3]>,
    pub mask: Vec<bool>,
}

impl NormalMap {
    pub fn get(&self, row: usize, col: usize) -> Option<[f64; 3]> {
        let i = row * self.width + col;
        self.mask[i].then_some(self.n[i])
    }
}

/// Pinhole intrinsics in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "focal lengths must be positive and finite, got fx={fx} fy={fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "principal point must be finite, got cx={cx} cy={cy}"
            )));
        }
        Ok(Self { fx, fy, cx, cy })
    }
}

/// Parses `FX,FY,CX,CY`.
impl FromStr for CameraIntrinsics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidParam(format!("intrinsics '{s}': {e}")))?;
        match parts[..] {
            [fx, fy, cx, cy] => Self::new(fx, fy, cx, cy),
            _ => Err(Error::InvalidParam(format!(
                "intrinsics '{s}': expected FX,FY,CX,CY"
            ))),
        }
    }
}

impl fmt::Display for CameraIntrinsics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.fx, self.fy, self.cx, self.cy)
    }
}

/// Scale and shift mapping relative depth to meters: `d = alpha·r + beta`.
/// `gamma = beta / alpha` is the same shift expressed in relative units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl AffineParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParam(format!(
                "affine parameters must be finite, got alpha={alpha} beta={beta}"
            )));
        }
        if alpha <= 0.0 {
            return Err(Error::NonPositiveScale { alpha });
        }
        Ok(Self {
            alpha,
            beta,
            gamma: beta / alpha,
        })
    }

    pub fn identity() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
        }
    }
}

/// Screened Poisson solve settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Weight of the anchor data term.
    pub lambda: f64,
    /// Relative residual `‖b − Au‖ / ‖b‖` at which CG stops.
    pub cg_tol: f64,
    /// Iteration cap; `None` picks one from the raster size.
    pub cg_max_iter: Option<usize>,
    /// Floor for `d + shift` before taking logs, in relative units.
    pub eps_pos: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            cg_tol: 1e-8,
            cg_max_iter: None,
            eps_pos: 1e-6,
        }
    }
}

impl SolverConfig {
    /// `10·max(H, W)·sqrt(min(H, W))`, capped at 20000.
    pub fn default_max_iter(height: usize, width: usize) -> usize {
        let (lo, hi) = (height.min(width) as f64, height.max(width) as f64);
        ((10.0 * hi * lo.sqrt()).ceil() as usize).clamp(1, 20_000)
    }

    pub fn max_iter_for(&self, height: usize, width: usize) -> usize {
        self.cg_max_iter
            .unwrap_or_else(|| Self::default_max_iter(height, width))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParam(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(Error::InvalidParam(format!("cg_tol must be in (0, 1), got {}", self.cg_tol)));
        }
        if self.cg_max_iter == Some(0) {
            return Err(Error::InvalidParam("cg_max_iter must be positive".into()));
        }
        if !(self.eps_pos.is_finite() && self.eps_pos > 0.0) {
            return Err(Error::InvalidParam(format!("eps_pos must be > 0, got {}", self.eps_pos)));
        }
        Ok(())
    }
}

/// Whether point-map losses average or sum over their terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossReduction {
    #[default]
    Mean,
    Sum,
}

/// Weights and neighbourhood settings for the point-map losses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_local: f64,
    pub lambda_normal: f64,
    pub anchor_count: usize,
    /// Sphere radius as a fraction of the median ground-truth point norm.
    pub radius_ratio: f64,
    pub reduction: LossReduction,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_local: 1.0,
            lambda_normal: 1.0,
            anchor_count: 64,
            radius_ratio: 0.1,
            reduction: LossReduction::Mean,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let finite = self.lambda_local.is_finite()
            && self.lambda_normal.is_finite()
            && self.radius_ratio.is_finite();
        if !finite || self.lambda_local < 0.0 || self.lambda_normal < 0.0 {
            return Err(Error::InvalidParam("loss weights must be finite and >= 0".into()));
        }
        if self.anchor_count == 0 {
            return Err(Error::InvalidParam("anchor_count must be positive".into()));
        }
        if self.radius_ratio <= 0.0 {
            return Err(Error::InvalidParam("radius_ratio must be positive".into()));
        }
        Ok(())
    }
}
