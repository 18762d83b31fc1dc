use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use depthcomp::align::{apply_affine, global_affine_align, lwlr_align, LwlrConfig};
use depthcomp::geometry::{backproject, loss_terms};
use depthcomp::io::{self, Report, ReportInputs, ReportSolver, Versions};
use depthcomp::metrics::{aggregate_ranking, depth_metrics, point_metrics, recover_metric, Direction, RankCell, Ranking};
use depthcomp::poisson::{poisson_complete, poisson_complete_no_global, SolveStats};
use depthcomp::sampling::{sample, SamplePattern, SampleSpec};
use depthcomp::{CameraIntrinsics, DepthRaster, LossReduction, LossWeights, SolverConfig, SparseDepth};

use crate::args::{AblateArgs, CompleteArgs, EvalArgs, LossesArgs, LwlrArgs, Method, PatternKind, SampleArgs, SolverArgs};

/// Why a command stopped, mapped one-to-one onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(anyhow::Error),
    NotConverged(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::NotConverged(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "{msg}"),
            Failure::Input(err) => write!(f, "{err:#}"),
            Failure::NotConverged(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure::Input(err)
    }
}

impl From<depthcomp::Error> for Failure {
    fn from(err: depthcomp::Error) -> Self {
        match err {
            depthcomp::Error::NotConverged { stats, .. } => Failure::NotConverged(not_converged_message(&stats)),
            other => Failure::Input(other.into()),
        }
    }
}

fn not_converged_message(stats: &SolveStats) -> String {
    format!(
        "solver did not converge: relative residual {:.3e} after {} iterations",
        stats.final_relative_residual, stats.iterations
    )
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn is_png(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn read_depth(path: &Path) -> anyhow::Result<DepthRaster> {
    let r = if is_png(path) { io::read_png16(path) } else { io::read_pfm(path) };
    r.with_context(|| format!("reading {}", path.display()))
}

fn write_depth(path: &Path, d: &DepthRaster) -> anyhow::Result<()> {
    if is_png(path) {
        let dropped = io::write_png16(path, d).with_context(|| format!("writing {}", path.display()))?;
        if dropped > 0 {
            eprintln!("warning: {dropped} pixels outside the 16-bit millimeter range were written as invalid");
        }
        Ok(())
    } else {
        io::write_pfm(path, d).with_context(|| format!("writing {}", path.display()))
    }
}

fn read_sparse(path: &Path, like: &DepthRaster) -> anyhow::Result<SparseDepth> {
    io::read_sparse_csv(path, like.height(), like.width()).with_context(|| format!("reading {}", path.display()))
}

fn same_dims(a: &DepthRaster, an: &str, b: &DepthRaster, bn: &str) -> anyhow::Result<()> {
    if a.dims() != b.dims() {
        anyhow::bail!(
            "{an} is {}x{} but {bn} is {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        );
    }
    Ok(())
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    io::write_report(path, value).with_context(|| format!("writing {}", path.display()))
}

fn solver_config(a: &SolverArgs) -> SolverConfig {
    SolverConfig {
        lambda: a.lambda,
        cg_tol: a.cg_tol,
        cg_max_iter: a.cg_max_iter,
        eps_pos: a.eps_pos,
    }
}

fn lwlr_config(a: &LwlrArgs, h: usize, w: usize) -> LwlrConfig {
    let mut cfg = LwlrConfig::for_dims(h, w);
    if let Some(b) = a.bandwidth {
        cfg.bandwidth = b;
    }
    cfg.ridge = a.ridge;
    cfg.min_effective_weight = a.min_effective_weight;
    cfg
}

fn echo_settings(map: &mut BTreeMap<String, Value>, solver: &SolverConfig, lwlr: &LwlrConfig, h: usize, w: usize) {
    map.insert("lambda".into(), json!(solver.lambda));
    map.insert("cg_tol".into(), json!(solver.cg_tol));
    map.insert("cg_max_iter".into(), json!(solver.max_iter_for(h, w)));
    map.insert("eps_pos".into(), json!(solver.eps_pos));
    map.insert("bandwidth".into(), json!(lwlr.bandwidth));
    map.insert("ridge".into(), json!(lwlr.ridge));
    map.insert("min_effective_weight".into(), json!(lwlr.min_effective_weight));
}

/// Runs one alignment method. Solver failures come back as the library
/// error so the caller can still report the stats.
fn run_method(
    method: Method,
    d_r: &DepthRaster,
    s: &SparseDepth,
    solver: &SolverConfig,
    lwlr: &LwlrConfig,
) -> depthcomp::Result<(DepthRaster, Option<SolveStats>)> {
    match method {
        Method::Poisson => poisson_complete(d_r, s, solver).map(|(d, st)| (d, Some(st))),
        Method::PoissonNoglobal => poisson_complete_no_global(d_r, s, solver).map(|(d, st)| (d, Some(st))),
        Method::Global => Ok((apply_affine(d_r, &global_affine_align(d_r, s)?), None)),
        Method::Lwlr => Ok((lwlr_align(d_r, s, lwlr)?, None)),
    }
}

pub fn complete(a: &CompleteArgs) -> Outcome {
    let d_r = read_depth(&a.relative)?;
    let s = read_sparse(&a.sparse, &d_r)?;
    let gt = a.gt.as_deref().map(read_depth).transpose()?;
    if let Some(gt) = &gt {
        same_dims(&d_r, "relative depth", gt, "ground truth")?;
    }
    let (h, w) = d_r.dims();
    let solver = solver_config(&a.solver);
    let lwlr = lwlr_config(&a.lwlr, h, w);
    solver.validate()?;
    lwlr.validate()?;

    let mut paths = BTreeMap::new();
    paths.insert("relative".into(), path_str(&a.relative));
    paths.insert("sparse".into(), path_str(&a.sparse));
    paths.insert("out".into(), path_str(&a.out));
    if let Some(g) = &a.gt {
        paths.insert("gt".into(), path_str(g));
    }
    let mut config = BTreeMap::new();
    config.insert("method".into(), json!(a.method.name()));
    config.insert("anchors".into(), json!(s.len()));
    echo_settings(&mut config, &solver, &lwlr, h, w);
    let mut report = Report {
        inputs: ReportInputs { paths, height: h, width: w, config },
        spec: None,
        solver: None,
        depth_metrics: None,
        point_metrics: None,
        versions: Versions::default(),
    };

    let (depth, stats) = match run_method(a.method, &d_r, &s, &solver, &lwlr) {
        Ok(done) => done,
        Err(depthcomp::Error::NotConverged { stats, .. }) => {
            report.solver = Some(ReportSolver::from(stats));
            if let Some(p) = &a.report {
                write_json(p, &report)?;
            }
            return Err(Failure::NotConverged(not_converged_message(&stats)));
        }
        Err(e) => return Err(e.into()),
    };
    write_depth(&a.out, &depth)?;
    if let Some(st) = stats {
        eprintln!(
            "{}: converged in {} iterations, relative residual {:.3e}",
            a.method.name(),
            st.iterations,
            st.final_relative_residual
        );
    }
    report.solver = stats.map(ReportSolver::from);
    if let Some(gt) = &gt {
        report.depth_metrics = Some(depth_metrics(&depth, gt)?);
    }
    if let Some(p) = &a.report {
        write_json(p, &report)?;
    }
    Ok(())
}

fn resolve_pattern(a: &SampleArgs) -> Result<SamplePattern, Failure> {
    let stray = |name: &str| usage(format!("--{name} does not apply to --pattern {:?}", a.pattern).to_lowercase());
    match a.pattern {
        PatternKind::Random => {
            if a.count.is_some() {
                return Err(stray("count"));
            }
            if a.lines.is_some() {
                return Err(stray("lines"));
            }
            let density = a.density.ok_or_else(|| usage("--pattern random needs --density"))?;
            Ok(SamplePattern::Random { density })
        }
        PatternKind::Keypoint => {
            if a.density.is_some() {
                return Err(stray("density"));
            }
            if a.lines.is_some() {
                return Err(stray("lines"));
            }
            if a.gray.is_none() {
                return Err(usage("--pattern keypoint needs --gray"));
            }
            let count = a.count.ok_or_else(|| usage("--pattern keypoint needs --count"))?;
            Ok(SamplePattern::Keypoint { count })
        }
        PatternKind::Lidar => {
            if a.density.is_some() {
                return Err(stray("density"));
            }
            if a.count.is_some() {
                return Err(stray("count"));
            }
            if a.intrinsics.is_none() {
                return Err(usage("--pattern lidar needs --intrinsics"));
            }
            let lines = a.lines.ok_or_else(|| usage("--pattern lidar needs --lines"))?;
            Ok(SamplePattern::Lidar { lines })
        }
    }
}

pub fn sample_cmd(a: &SampleArgs) -> Outcome {
    let pattern = resolve_pattern(a)?;
    let spec = SampleSpec { pattern, noise_sigma: a.noise_sigma, seed: a.seed };
    let gt = read_depth(&a.gt)?;
    let gray = a.gray.as_deref().map(read_depth).transpose()?;
    let out = sample(&spec, &gt, gray.as_ref(), a.intrinsics.as_ref())?;
    if out.warning {
        eprintln!(
            "warning: fewer corners than requested; topped up with random pixels ({} anchors)",
            out.sparse.len()
        );
    }
    io::write_sparse_csv(&a.out, &out.sparse).with_context(|| format!("writing {}", a.out.display()))?;
    print!("{}", io::to_json(&spec)?);
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Outcome {
    let pred = read_depth(&a.pred)?;
    let gt = read_depth(&a.gt)?;
    same_dims(&pred, "prediction", &gt, "ground truth")?;
    let mut paths = BTreeMap::new();
    paths.insert("pred".into(), path_str(&a.pred));
    paths.insert("gt".into(), path_str(&a.gt));
    let mut config = BTreeMap::new();
    config.insert("pred_relative".into(), json!(a.pred_relative));
    config.insert("point".into(), json!(a.point));
    if let Some(k) = &a.intrinsics {
        config.insert("intrinsics".into(), json!(k));
    }

    let pred = if a.pred_relative {
        let sparse = a.sparse.as_deref().ok_or_else(|| usage("--pred-relative needs --sparse"))?;
        paths.insert("sparse".into(), path_str(sparse));
        let s = read_sparse(sparse, &pred)?;
        let fit = global_affine_align(&pred, &s)?;
        config.insert("alpha".into(), json!(fit.alpha));
        config.insert("beta".into(), json!(fit.beta));
        recover_metric(&pred, &s)?
    } else {
        pred
    };
    let depth = depth_metrics(&pred, &gt)?;
    let points = if a.point {
        let k: &CameraIntrinsics = a.intrinsics.as_ref().ok_or_else(|| usage("--point needs --intrinsics"))?;
        Some(point_metrics(&backproject(&pred, k), &backproject(&gt, k))?)
    } else {
        None
    };
    let report = Report {
        inputs: ReportInputs { paths, height: gt.height(), width: gt.width(), config },
        spec: None,
        solver: None,
        depth_metrics: Some(depth),
        point_metrics: points,
        versions: Versions::default(),
    };
    write_json(&a.report, &report)?;
    print!("{}", io::to_json(&report)?);
    Ok(())
}

fn parse_pattern(token: &str) -> Result<SamplePattern, Failure> {
    let bad = || usage(format!("pattern '{token}': expected random:DENSITY, keypoint:COUNT or lidar:LINES"));
    let (kind, value) = token.trim().split_once(':').ok_or_else(bad)?;
    Ok(match kind {
        "random" => SamplePattern::Random { density: value.parse().map_err(|_| bad())? },
        "keypoint" => SamplePattern::Keypoint { count: value.parse().map_err(|_| bad())? },
        "lidar" => SamplePattern::Lidar { lines: value.parse().map_err(|_| bad())? },
        _ => return Err(bad()),
    })
}

fn pattern_token(p: &SamplePattern) -> String {
    match p {
        SamplePattern::Random { density } => format!("random:{density}"),
        SamplePattern::Keypoint { count } => format!("keypoint:{count}"),
        SamplePattern::Lidar { lines } => format!("lidar:{lines}"),
    }
}

#[derive(Serialize)]
struct ArmResult {
    method: &'static str,
    rel: f64,
    iterations: Option<usize>,
}

#[derive(Serialize)]
struct AblateCell {
    name: String,
    spec: SampleSpec,
    anchors: usize,
    sampler_warning: bool,
    arms: Vec<ArmResult>,
}

#[derive(Serialize)]
struct AblateReport {
    inputs: ReportInputs,
    cells: Vec<AblateCell>,
    ranking: Ranking,
    versions: Versions,
}

struct Scene<'a> {
    gt: &'a DepthRaster,
    d_r: &'a DepthRaster,
    gray: Option<&'a DepthRaster>,
    intrinsics: Option<&'a CameraIntrinsics>,
    solver: &'a SolverConfig,
    lwlr: &'a LwlrConfig,
}

fn ablate_cell(scene: &Scene, spec: SampleSpec) -> Result<AblateCell, Failure> {
    let drawn = sample(&spec, scene.gt, scene.gray, scene.intrinsics)?;
    let mut arms = Vec::with_capacity(Method::ALL.len());
    for method in Method::ALL {
        let (pred, stats) = run_method(method, scene.d_r, &drawn.sparse, scene.solver, scene.lwlr)?;
        arms.push(ArmResult {
            method: method.name(),
            rel: depth_metrics(&pred, scene.gt)?.rel,
            iterations: stats.map(|s| s.iterations),
        });
    }
    Ok(AblateCell {
        name: format!("{}/seed={}", pattern_token(&spec.pattern), spec.seed),
        spec,
        anchors: drawn.sparse.len(),
        sampler_warning: drawn.warning,
        arms,
    })
}

pub fn ablate(a: &AblateArgs) -> Outcome {
    let patterns = a.patterns.iter().map(|t| parse_pattern(t)).collect::<Result<Vec<_>, _>>()?;
    if patterns.iter().any(|p| matches!(p, SamplePattern::Keypoint { .. })) && a.gray.is_none() {
        return Err(usage("keypoint patterns need --gray"));
    }
    if patterns.iter().any(|p| matches!(p, SamplePattern::Lidar { .. })) && a.intrinsics.is_none() {
        return Err(usage("lidar patterns need --intrinsics"));
    }
    let gt = read_depth(&a.gt)?;
    let d_r = read_depth(&a.relative)?;
    same_dims(&d_r, "relative depth", &gt, "ground truth")?;
    let gray = a.gray.as_deref().map(read_depth).transpose()?;
    let (h, w) = gt.dims();
    let solver = solver_config(&a.solver);
    let lwlr = lwlr_config(&a.lwlr, h, w);
    solver.validate()?;
    lwlr.validate()?;

    let specs: Vec<SampleSpec> = patterns
        .iter()
        .flat_map(|&pattern| a.seeds.iter().map(move |&seed| SampleSpec { pattern, noise_sigma: a.noise_sigma, seed }))
        .collect();
    for spec in &specs {
        spec.validate()?;
    }
    let scene = Scene {
        gt: &gt,
        d_r: &d_r,
        gray: gray.as_ref(),
        intrinsics: a.intrinsics.as_ref(),
        solver: &solver,
        lwlr: &lwlr,
    };
    // cells run in parallel but are collected in (pattern, seed) order
    let cells = specs
        .par_iter()
        .map(|&spec| ablate_cell(&scene, spec))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let methods: Vec<String> = Method::ALL.iter().map(|m| m.name().to_string()).collect();
    let rank_cells: Vec<RankCell> = cells
        .iter()
        .map(|c| RankCell {
            name: c.name.clone(),
            direction: Direction::LowerIsBetter,
            values: c.arms.iter().map(|arm| Some(arm.rel)).collect(),
        })
        .collect();
    let ranking = aggregate_ranking(&methods, &rank_cells)?;

    let mut paths = BTreeMap::new();
    paths.insert("gt".into(), path_str(&a.gt));
    paths.insert("relative".into(), path_str(&a.relative));
    if let Some(g) = &a.gray {
        paths.insert("gray".into(), path_str(g));
    }
    let mut config = BTreeMap::new();
    config.insert("patterns".into(), json!(patterns.iter().map(pattern_token).collect::<Vec<_>>()));
    config.insert("seeds".into(), json!(a.seeds));
    config.insert("noise_sigma".into(), json!(a.noise_sigma));
    if let Some(k) = &a.intrinsics {
        config.insert("intrinsics".into(), json!(k));
    }
    echo_settings(&mut config, &solver, &lwlr, h, w);
    let report = AblateReport {
        inputs: ReportInputs { paths, height: h, width: w, config },
        cells,
        ranking,
        versions: Versions::default(),
    };
    write_json(&a.report, &report)?;

    println!("{:<18} {:>9} {:>11}", "method", "mean rank", "median REL");
    for (m, name) in methods.iter().enumerate() {
        let mut rels: Vec<f64> = report.cells.iter().map(|c| c.arms[m].rel).collect();
        rels.sort_by(f64::total_cmp);
        let median = if rels.len() % 2 == 1 {
            rels[rels.len() / 2]
        } else {
            0.5 * (rels[rels.len() / 2 - 1] + rels[rels.len() / 2])
        };
        println!("{name:<18} {:>9.3} {median:>11.5}", report.ranking.mean_rank[m]);
    }
    Ok(())
}

pub fn losses(a: &LossesArgs) -> Outcome {
    let read = |p: &Path| io::read_point_map(p).with_context(|| format!("reading point map {}", p.display()));
    let pred = read(&a.pred_points)?;
    let gt = read(&a.gt_points)?;
    let weights = LossWeights {
        lambda_local: a.lambda_local,
        lambda_normal: a.lambda_normal,
        anchor_count: a.anchors,
        radius_ratio: a.radius_ratio,
        reduction: LossReduction::Mean,
    };
    let terms = loss_terms(&pred, &gt, &weights, a.seed)?;
    print!("{}", io::to_json(&terms)?);
    Ok(())
}
