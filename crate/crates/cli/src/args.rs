use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use depthcomp::CameraIntrinsics;

/// Metric depth completion from relative depth and sparse anchors.
///
/// Depth rasters are read and written as PFM (meters) or, with a `.png`
/// extension, 16-bit PNG in millimeters. Sparse anchors are CSV files with
/// the header `row,col,depth_m`.
///
/// Exit codes: 0 success, 1 usage, 2 input or validation, 3 solver did not
/// converge. THREADS (positive integer) caps worker threads.
#[derive(Parser, Debug)]
#[command(name = "depthcomp", version, args_override_self = true)]
pub struct Cli {
    /// Key-value file (`key = value` per line, keys are flag names without
    /// dashes). Flags on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Complete a relative depth map into dense metric depth.
    Complete(CompleteArgs),
    /// Draw sparse anchors from dense ground truth.
    Sample(SampleArgs),
    /// Score a prediction against ground truth.
    Eval(EvalArgs),
    /// Compare the four alignment methods over patterns and seeds.
    Ablate(AblateArgs),
    /// Point-map training losses between two point maps.
    Losses(LossesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Screened Poisson with gradients of the globally shifted input.
    Poisson,
    /// Screened Poisson with gradients of the raw input.
    PoissonNoglobal,
    /// One least-squares scale and shift.
    Global,
    /// Locally weighted scale and shift.
    Lwlr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Poisson, Method::Global, Method::PoissonNoglobal, Method::Lwlr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Poisson => "poisson",
            Method::PoissonNoglobal => "poisson-noglobal",
            Method::Global => "global",
            Method::Lwlr => "lwlr",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Anchor weight in the screened Poisson energy.
    #[arg(long, default_value_t = 1.0, value_name = "F")]
    pub lambda: f64,
    /// CG stopping threshold on ||b - Au|| / ||b||.
    #[arg(long, default_value = "1e-8", value_name = "F")]
    pub cg_tol: f64,
    /// CG iteration cap [default: 10 * max(H,W) * sqrt(min(H,W)), at most 20000].
    #[arg(long, value_name = "N")]
    pub cg_max_iter: Option<usize>,
    /// Floor for relative depth + shift before taking logs (relative units).
    #[arg(long, default_value = "1e-6", value_name = "F")]
    pub eps_pos: f64,
}

#[derive(Args, Debug, Clone)]
pub struct LwlrArgs {
    /// Gaussian kernel width for lwlr, in pixels [default: max(H,W) / 8].
    #[arg(long, value_name = "PX")]
    pub bandwidth: Option<f64>,
    /// Pull of each local fit toward the global fit.
    #[arg(long, default_value = "1e-3", value_name = "F")]
    pub ridge: f64,
    /// Below this total kernel weight a pixel uses the global fit.
    #[arg(long, default_value = "1e-6", value_name = "F")]
    pub min_effective_weight: f64,
}

#[derive(Args, Debug)]
pub struct CompleteArgs {
    /// Relative depth (dense, positive).
    #[arg(long, value_name = "PATH")]
    pub relative: PathBuf,
    /// Metric anchors as CSV; pixel bounds come from the relative depth.
    #[arg(long, value_name = "PATH")]
    pub sparse: PathBuf,
    /// Output metric depth (meters).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Poisson)]
    pub method: Method,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub lwlr: LwlrArgs,
    /// Ground truth; adds depth metrics to the report.
    #[arg(long, value_name = "PATH")]
    pub gt: Option<PathBuf>,
    /// JSON report. Written even when the solver does not converge.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PatternKind {
    Random,
    Keypoint,
    Lidar,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Dense metric ground truth.
    #[arg(long, value_name = "PATH")]
    pub gt: PathBuf,
    #[arg(long, value_enum)]
    pub pattern: PatternKind,
    /// Fraction of valid pixels for `random`, in (0, 1].
    #[arg(long, value_name = "F")]
    pub density: Option<f64>,
    /// Number of points for `keypoint`.
    #[arg(long, value_name = "N")]
    pub count: Option<usize>,
    /// Number of beams for `lidar`.
    #[arg(long, value_name = "N")]
    pub lines: Option<usize>,
    /// Intensity image for `keypoint`, same size as the ground truth.
    #[arg(long, value_name = "PATH")]
    pub gray: Option<PathBuf>,
    /// Pinhole intrinsics in pixels, needed by `lidar`.
    #[arg(long, value_name = "FX,FY,CX,CY")]
    pub intrinsics: Option<CameraIntrinsics>,
    /// Multiplicative Gaussian noise standard deviation (0 disables).
    #[arg(long, default_value_t = depthcomp::sampling::DEFAULT_NOISE_SIGMA, value_name = "F")]
    pub noise_sigma: f64,
    #[arg(long, value_name = "N")]
    pub seed: u64,
    /// Output CSV.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Predicted depth (meters, or relative with --pred-relative).
    #[arg(long, value_name = "PATH")]
    pub pred: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub gt: PathBuf,
    /// Fit a global scale and shift to --sparse before scoring.
    #[arg(long, requires = "sparse")]
    pub pred_relative: bool,
    /// Anchors for --pred-relative.
    #[arg(long, value_name = "PATH")]
    pub sparse: Option<PathBuf>,
    /// Pinhole intrinsics in pixels, needed by --point.
    #[arg(long, value_name = "FX,FY,CX,CY")]
    pub intrinsics: Option<CameraIntrinsics>,
    /// Also back-project both maps and add point metrics.
    #[arg(long, requires = "intrinsics")]
    pub point: bool,
    #[arg(long, value_name = "PATH")]
    pub report: PathBuf,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    /// Dense metric ground truth.
    #[arg(long, value_name = "PATH")]
    pub gt: PathBuf,
    /// Relative depth to align.
    #[arg(long, value_name = "PATH")]
    pub relative: PathBuf,
    /// Comma-separated patterns: `random:DENSITY`, `keypoint:COUNT`, `lidar:LINES`.
    #[arg(long, value_name = "LIST", value_delimiter = ',', required = true)]
    pub patterns: Vec<String>,
    /// Comma-separated sampling seeds.
    #[arg(long, value_name = "LIST", value_delimiter = ',', required = true)]
    pub seeds: Vec<u64>,
    /// Intensity image, needed by keypoint patterns.
    #[arg(long, value_name = "PATH")]
    pub gray: Option<PathBuf>,
    /// Pinhole intrinsics in pixels, needed by lidar patterns.
    #[arg(long, value_name = "FX,FY,CX,CY")]
    pub intrinsics: Option<CameraIntrinsics>,
    /// Multiplicative Gaussian noise standard deviation (0 disables).
    #[arg(long, default_value_t = depthcomp::sampling::DEFAULT_NOISE_SIGMA, value_name = "F")]
    pub noise_sigma: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub lwlr: LwlrArgs,
    #[arg(long, value_name = "PATH")]
    pub report: PathBuf,
}

#[derive(Args, Debug)]
pub struct LossesArgs {
    /// Prefix of the predicted point map (PREFIX.{x,y,z,mask}.pfm).
    #[arg(long, value_name = "PREFIX")]
    pub pred_points: PathBuf,
    /// Prefix of the ground-truth point map.
    #[arg(long, value_name = "PREFIX")]
    pub gt_points: PathBuf,
    #[arg(long, default_value_t = 1.0, value_name = "F")]
    pub lambda_local: f64,
    #[arg(long, default_value_t = 1.0, value_name = "F")]
    pub lambda_normal: f64,
    /// Sphere centres for the local term.
    #[arg(long, default_value_t = 64, value_name = "N")]
    pub anchors: usize,
    /// Sphere radius as a fraction of the median ground-truth point norm.
    #[arg(long, default_value_t = 0.1, value_name = "F")]
    pub radius_ratio: f64,
    #[arg(long, value_name = "N")]
    pub seed: u64,
}
