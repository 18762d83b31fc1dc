use thiserror::Error;

use crate::poisson::SolveStats;
use crate::types::DepthRaster;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("non-positive value at ({row},{col})")]
    NonPositive { row: usize, col: usize },

    #[error("raster is {height}x{width}, at least 2x2 is required")]
    TooSmall { height: usize, width: usize },

    #[error("raster must be fully valid, first invalid pixel at ({row},{col})")]
    NotDense { row: usize, col: usize },

    #[error("pixel ({row},{col}) is out of bounds for a {height}x{width} raster")]
    OutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("duplicate pixel ({row},{col})")]
    DuplicatePixel { row: usize, col: usize },

    #[error("invalid depth {depth} at ({row},{col})")]
    InvalidDepth { row: usize, col: usize, depth: f32 },

    #[error("need at least {need} anchors, got {got}")]
    TooFewAnchors { need: usize, got: usize },

    #[error("relative depth is invalid at anchor ({row},{col})")]
    InvalidAtAnchor { row: usize, col: usize },

    #[error("relative depth has zero variance over the anchors")]
    SingularFit,

    #[error("fitted scale {alpha} is not positive")]
    NonPositiveScale { alpha: f64 },

    #[error("{floored} of {total} pixels fell below the positivity floor after shifting")]
    ShiftInconsistent { floored: usize, total: usize },

    #[error("non-finite value in conjugate gradient at iteration {iteration}")]
    Breakdown { iteration: usize },

    #[error("operator is not positive definite (curvature {curvature} at iteration {iteration})")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error(
        "conjugate gradient stopped after {} iterations at relative residual {:e}",
        stats.iterations,
        stats.final_relative_residual
    )]
    NotConverged {
        stats: SolveStats,
        partial: Box<DepthRaster>,
    },

    #[error("no valid pixels")]
    NoValidPixels,

    #[error("point-map alignment is singular (prediction is constant over the mask)")]
    SingularAlignment,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("ranking: {0}")]
    Ranking(String),

    #[error("color PFM unsupported")]
    ColorPfm,

    #[error("malformed PFM: {0}")]
    Pfm(String),

    #[error("png: {0}")]
    Png(String),

    #[error("line {line}: {msg}")]
    Csv { line: u64, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
