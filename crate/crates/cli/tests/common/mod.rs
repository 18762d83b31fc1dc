#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use depthcomp::io;
use depthcomp::synth::{relative_from, smooth_depth, Distortion};
use depthcomp::{DepthRaster, SparseDepth, SparseEntry};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn depthcomp(args: &[&str]) -> Run {
    depthcomp_env(args, &[])
}

pub fn depthcomp_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_depthcomp"));
    cmd.args(args).env_remove("THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// A temporary directory with helpers for writing fixtures into it.
pub struct Workdir {
    pub dir: tempfile::TempDir,
}

impl Workdir {
    pub fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    pub fn depth(&self, name: &str, d: &DepthRaster) -> String {
        io::write_pfm(self.path(name), d).unwrap();
        self.arg(name)
    }

    pub fn sparse(&self, name: &str, s: &SparseDepth) -> String {
        io::write_sparse_csv(self.path(name), s).unwrap();
        self.arg(name)
    }

    pub fn text(&self, name: &str, body: &str) -> String {
        std::fs::write(self.path(name), body).unwrap();
        self.arg(name)
    }

    pub fn read(&self, name: &str) -> Vec<u8> {
        std::fs::read(self.path(name)).unwrap()
    }

    pub fn json(&self, name: &str) -> serde_json::Value {
        serde_json::from_slice(&self.read(name)).unwrap()
    }
}

pub fn anchors(gt: &DepthRaster, count: usize, seed: u64) -> SparseDepth {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = gt.dims();
    let entries = rand::seq::index::sample(&mut rng, h * w, count)
        .into_iter()
        .map(|i| SparseEntry { row: i / w, col: i % w, depth: gt.data()[i] })
        .collect();
    SparseDepth::new(h, w, entries).unwrap()
}

/// Ground truth and an exactly affine relative map of it.
pub fn affine_pair(h: usize, w: usize, seed: u64, alpha: f64, beta: f64) -> (DepthRaster, DepthRaster) {
    let gt = smooth_depth(h, w, seed);
    let rel = relative_from(&gt, Distortion::Affine { alpha, beta });
    (gt, rel)
}

pub fn rel_of(pred: &Path, gt: &DepthRaster) -> f64 {
    let pred = io::read_pfm(pred).unwrap();
    depthcomp::metrics::depth_metrics(&pred, gt).unwrap().rel
}
