//! In-browser playground: make a synthetic scene, draw sparse anchors from
//! it, and complete the relative depth with any of the four methods.
//!
//! Build with `wasm-pack build --target web --out-dir www/pkg` and serve
//! `www/`. All maps cross the boundary as row-major `Float32Array`s; invalid
//! pixels are NaN.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use depthcomp::align::{apply_affine, global_affine_align, lwlr_align, LwlrConfig};
use depthcomp::metrics::{depth_metrics, DepthMetrics};
use depthcomp::poisson::{poisson_complete, poisson_complete_no_global};
use depthcomp::sampling::{sample, SamplePattern, SampleSpec};
use depthcomp::synth::{default_intrinsics, intensity, relative_from, smooth_depth, Distortion};
use depthcomp::{CameraIntrinsics, DepthRaster, SolverConfig, SparseDepth};

const METHODS: [&str; 4] = ["poisson", "global", "poisson-noglobal", "lwlr"];

#[derive(Serialize)]
struct Completion {
    method: String,
    lambda: f64,
    iterations: Option<usize>,
    converged: Option<bool>,
    metrics: DepthMetrics,
}

#[derive(Serialize)]
struct Row {
    method: &'static str,
    rel: f64,
    rmse: f64,
    delta1: f64,
}

#[wasm_bindgen]
pub struct Demo {
    gt: DepthRaster,
    relative: DepthRaster,
    gray: DepthRaster,
    intrinsics: CameraIntrinsics,
    sparse: Option<SparseDepth>,
    completed: Option<DepthRaster>,
}

fn to_js(e: impl ToString) -> JsError {
    JsError::new(&e.to_string())
}

fn nan_filled(d: &DepthRaster) -> Vec<f32> {
    d.data()
        .iter()
        .zip(d.mask())
        .map(|(&v, &m)| if m { v } else { f32::NAN })
        .collect()
}

fn parse_distortion(name: &str) -> Result<Distortion, String> {
    match name {
        "sqrt" => Ok(Distortion::Sqrt),
        "cbrt" => Ok(Distortion::CubeRoot),
        "affine" => Ok(Distortion::Affine { alpha: 2.0, beta: 0.5 }),
        other => Err(format!("unknown distortion '{other}'")),
    }
}

fn parse_pattern(name: &str, amount: f64) -> Result<SamplePattern, String> {
    match name {
        "random" => Ok(SamplePattern::Random { density: amount }),
        "keypoint" => Ok(SamplePattern::Keypoint { count: amount as usize }),
        "lidar" => Ok(SamplePattern::Lidar { lines: amount as usize }),
        other => Err(format!("unknown pattern '{other}'")),
    }
}

impl Demo {
    fn build(height: usize, width: usize, seed: u64, distortion: &str) -> Result<Demo, String> {
        if height < 2 || width < 2 || height * width > 512 * 512 {
            return Err(format!("scene size {height}x{width} out of range"));
        }
        let gt = smooth_depth(height, width, seed);
        let relative = relative_from(&gt, parse_distortion(distortion)?);
        let gray = intensity(&gt, seed);
        Ok(Demo {
            intrinsics: default_intrinsics(height, width),
            gt,
            relative,
            gray,
            sparse: None,
            completed: None,
        })
    }

    fn draw(&mut self, pattern: &str, amount: f64, noise_sigma: f64, seed: u64) -> Result<usize, String> {
        let spec = SampleSpec { pattern: parse_pattern(pattern, amount)?, noise_sigma, seed };
        let out = sample(&spec, &self.gt, Some(&self.gray), Some(&self.intrinsics)).map_err(|e| e.to_string())?;
        let n = out.sparse.len();
        self.sparse = Some(out.sparse);
        self.completed = None;
        Ok(n)
    }

    fn run(&self, method: &str, lambda: f64) -> Result<(DepthRaster, Option<(usize, bool)>), String> {
        let s = self.sparse.as_ref().ok_or("draw anchors first")?;
        let cfg = SolverConfig { lambda, ..SolverConfig::default() };
        let d_r = &self.relative;
        let solved = |r: depthcomp::Result<(DepthRaster, depthcomp::poisson::SolveStats)>| match r {
            Ok((d, st)) => Ok((d, Some((st.iterations, st.converged)))),
            Err(depthcomp::Error::NotConverged { stats, partial }) => Ok((*partial, Some((stats.iterations, false)))),
            Err(e) => Err(e.to_string()),
        };
        match method {
            "poisson" => solved(poisson_complete(d_r, s, &cfg)),
            "poisson-noglobal" => solved(poisson_complete_no_global(d_r, s, &cfg)),
            "global" => {
                let fit = global_affine_align(d_r, s).map_err(|e| e.to_string())?;
                Ok((apply_affine(d_r, &fit), None))
            }
            "lwlr" => {
                let cfg = LwlrConfig::for_dims(d_r.height(), d_r.width());
                Ok((lwlr_align(d_r, s, &cfg).map_err(|e| e.to_string())?, None))
            }
            other => Err(format!("unknown method '{other}'")),
        }
    }

    fn complete_inner(&mut self, method: &str, lambda: f64) -> Result<String, String> {
        let (depth, stats) = self.run(method, lambda)?;
        let summary = Completion {
            method: method.to_string(),
            lambda,
            iterations: stats.map(|s| s.0),
            converged: stats.map(|s| s.1),
            metrics: depth_metrics(&depth, &self.gt).map_err(|e| e.to_string())?,
        };
        self.completed = Some(depth);
        depthcomp::io::to_json(&summary).map_err(|e| e.to_string())
    }

    fn compare_inner(&self, lambda: f64) -> Result<String, String> {
        let rows = METHODS
            .iter()
            .map(|&m| {
                let (depth, _) = self.run(m, lambda)?;
                let metrics = depth_metrics(&depth, &self.gt).map_err(|e| e.to_string())?;
                Ok(Row { method: m, rel: metrics.rel, rmse: metrics.rmse, delta1: metrics.delta1 })
            })
            .collect::<Result<Vec<_>, String>>()?;
        depthcomp::io::to_json(&rows).map_err(|e| e.to_string())
    }
}

#[wasm_bindgen]
impl Demo {
    /// A seeded smooth scene; `distortion` is `sqrt`, `cbrt` or `affine`.
    #[wasm_bindgen(constructor)]
    pub fn new(height: usize, width: usize, seed: u64, distortion: &str) -> Result<Demo, JsError> {
        Demo::build(height, width, seed, distortion).map_err(to_js)
    }

    pub fn height(&self) -> usize {
        self.gt.height()
    }

    pub fn width(&self) -> usize {
        self.gt.width()
    }

    #[wasm_bindgen(js_name = groundTruth)]
    pub fn ground_truth(&self) -> Vec<f32> {
        nan_filled(&self.gt)
    }

    pub fn relative(&self) -> Vec<f32> {
        nan_filled(&self.relative)
    }

    /// Draws anchors; `amount` is the density, point count or beam count.
    /// Returns how many anchors were drawn.
    pub fn sample(&mut self, pattern: &str, amount: f64, noise_sigma: f64, seed: u64) -> Result<usize, JsError> {
        self.draw(pattern, amount, noise_sigma, seed).map_err(to_js)
    }

    /// Anchor pixels as flat `[row, col, row, col, ...]`.
    pub fn anchors(&self) -> Vec<u32> {
        self.sparse
            .iter()
            .flat_map(|s| s.entries())
            .flat_map(|e| [e.row as u32, e.col as u32])
            .collect()
    }

    /// Completes with one method and returns a JSON summary with metrics.
    pub fn complete(&mut self, method: &str, lambda: f64) -> Result<String, JsError> {
        self.complete_inner(method, lambda).map_err(to_js)
    }

    pub fn completed(&self) -> Vec<f32> {
        self.completed.as_ref().map(nan_filled).unwrap_or_default()
    }

    /// `|pred − gt| / gt` of the last completion.
    #[wasm_bindgen(js_name = errorMap)]
    pub fn error_map(&self) -> Vec<f32> {
        let Some(pred) = &self.completed else {
            return Vec::new();
        };
        pred.data()
            .iter()
            .zip(self.gt.data())
            .map(|(&p, &g)| (p - g).abs() / g)
            .collect()
    }

    /// All four methods on the current anchors, as a JSON table.
    pub fn compare(&self, lambda: f64) -> Result<String, JsError> {
        self.compare_inner(lambda).map_err(to_js)
    }
}
