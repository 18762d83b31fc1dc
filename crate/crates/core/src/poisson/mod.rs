//! Screened gradient-domain reconstruction of metric depth.
//!
//! The unknown is `u = log D`. The energy
//!
//! ```text
//! Σ_edges (u_q − u_p − g_pq)² + λ Σ_anchors (u_i − log S_i)²
//! ```
//!
//! has normal equations `(L + λ·MᵀM) u = ∇ᵀg + λ·Mᵀ log S`, where `L` is
//! the 4-neighbour Laplacian with Neumann boundaries and `M` selects anchor
//! pixels. The target gradients `g` are forward differences of
//! `log(d_r + γ)`, with `γ = β/α` taken from the global scale/shift fit.

mod cg;
mod operator;

use serde::{Deserialize, Serialize};

pub use cg::{conjugate_gradient, conjugate_gradient_from};
pub use operator::{apply_system_operator, LinearOperator, ScreenedPoisson};

use crate::align::global_affine_align;
use crate::error::{Error, Result};
use crate::types::{DepthRaster, GradientField, SolverConfig, SparseDepth};

/// Outcome of a conjugate-gradient run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
}

/// Forward-difference gradients of `log(max(d + shift, eps_pos))`.
///
/// Pixels that hit the floor are counted in `floored`; more than 5% of the
/// image hitting it means the shift does not fit the data and is an error.
pub fn log_gradient(d: &DepthRaster, shift: f64, eps_pos: f64) -> Result<GradientField> {
    if let Some((row, col)) = d.first_invalid() {
        return Err(Error::NotDense { row, col });
    }
    if !shift.is_finite() {
        return Err(Error::InvalidParam(format!("shift must be finite, got {shift}")));
    }
    let (logs, floored) = shifted_logs(d, shift, eps_pos);
    let total = d.len();
    if floored * 20 > total {
        return Err(Error::ShiftInconsistent { floored, total });
    }
    let (h, w) = d.dims();
    let mut gx = vec![0.0; total];
    let mut gy = vec![0.0; total];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                gx[i] = logs[i + 1] - logs[i];
            }
            if r + 1 < h {
                gy[i] = logs[i + w] - logs[i];
            }
        }
    }
    Ok(GradientField {
        height: h,
        width: w,
        gx,
        gy,
        floored,
    })
}

fn shifted_logs(d: &DepthRaster, shift: f64, eps_pos: f64) -> (Vec<f64>, usize) {
    let mut floored = 0;
    let logs = d
        .data()
        .iter()
        .map(|&v| {
            let s = v as f64 + shift;
            if s <= eps_pos {
                floored += 1;
                eps_pos.ln()
            } else {
                s.ln()
            }
        })
        .collect();
    (logs, floored)
}

/// `∇ᵀg + λ·Mᵀ log S`.
fn right_hand_side(g: &GradientField, s: &SparseDepth, lambda: f64) -> Vec<f64> {
    let (h, w) = (g.height, g.width);
    let mut b = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                b[i] -= g.gx[i];
                b[i + 1] += g.gx[i];
            }
            if r + 1 < h {
                b[i] -= g.gy[i];
                b[i + w] += g.gy[i];
            }
        }
    }
    for e in s.entries() {
        b[e.row * w + e.col] += lambda * (e.depth as f64).ln();
    }
    b
}

/// Dense metric depth from relative depth and anchors.
///
/// Fits the global scale/shift, builds the target log-gradients of
/// `d_r + γ`, and solves the screened Poisson system with CG. On
/// non-convergence the error carries the stats and the last iterate.
pub fn poisson_complete(
    d_r: &DepthRaster,
    s: &SparseDepth,
    cfg: &SolverConfig,
) -> Result<(DepthRaster, SolveStats)> {
    check_inputs(d_r, s, cfg)?;
    let shift = global_affine_align(d_r, s)?.gamma;
    solve(d_r, s, shift, cfg)
}

/// [`poisson_complete`] with the shift forced to zero, i.e. target gradients
/// taken straight from `log d_r`.
pub fn poisson_complete_no_global(
    d_r: &DepthRaster,
    s: &SparseDepth,
    cfg: &SolverConfig,
) -> Result<(DepthRaster, SolveStats)> {
    check_inputs(d_r, s, cfg)?;
    solve(d_r, s, 0.0, cfg)
}

fn check_inputs(d_r: &DepthRaster, s: &SparseDepth, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if !(cfg.lambda > 0.0) {
        return Err(Error::InvalidParam("lambda must be > 0 for metric completion".into()));
    }
    if d_r.dims() != s.dims() {
        return Err(Error::Dimension(format!(
            "relative depth is {}x{} but anchors are for {}x{}",
            d_r.height(),
            d_r.width(),
            s.height(),
            s.width()
        )));
    }
    let (height, width) = d_r.dims();
    if height < 2 || width < 2 {
        return Err(Error::TooSmall { height, width });
    }
    if let Some((row, col)) = d_r.first_invalid() {
        return Err(Error::NotDense { row, col });
    }
    if s.len() < 2 {
        return Err(Error::TooFewAnchors { need: 2, got: s.len() });
    }
    Ok(())
}

fn solve(
    d_r: &DepthRaster,
    s: &SparseDepth,
    shift: f64,
    cfg: &SolverConfig,
) -> Result<(DepthRaster, SolveStats)> {
    let (h, w) = d_r.dims();
    let g = log_gradient(d_r, shift, cfg.eps_pos)?;
    let b = right_hand_side(&g, s, cfg.lambda);
    let op = ScreenedPoisson::new(s, cfg.lambda);

    // Start from the shifted log-depth moved by the constant that best
    // matches the anchors. The minimizer is unchanged.
    let (mut x0, _) = shifted_logs(d_r, shift, cfg.eps_pos);
    let offset = s
        .entries()
        .iter()
        .map(|e| (e.depth as f64).ln() - x0[e.row * w + e.col])
        .sum::<f64>()
        / s.len() as f64;
    x0.iter_mut().for_each(|v| *v += offset);

    let (u, stats) = conjugate_gradient_from(&op, &b, x0, cfg.cg_tol, cfg.max_iter_for(h, w))?;
    let depth = DepthRaster::from_options(h, w, u.iter().map(|v| Some(v.exp() as f32)))?;
    if !stats.converged {
        return Err(Error::NotConverged {
            stats,
            partial: Box::new(depth),
        });
    }
    Ok((depth, stats))
}
