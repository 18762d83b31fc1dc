mod common;

use common::*;
use depthcomp::align::global_affine_align;
use depthcomp::poisson::{
    apply_system_operator, conjugate_gradient, log_gradient, poisson_complete, poisson_complete_no_global,
    LinearOperator, ScreenedPoisson,
};
use depthcomp::synth::{relative_from, smooth_depth, Distortion};
use depthcomp::{DepthRaster, Error, SolverConfig, SparseDepth};
use nalgebra::DVector;
use rand::Rng;

#[test]
fn log_gradient_matches_hand_loop() {
    let d = DepthRaster::from_dense(3, 3, vec![1.0, 2.0, 4.0, 0.5, 1.5, 3.0, 2.5, 0.75, 1.25]).unwrap();
    let shift = 0.25;
    let g = log_gradient(&d, shift, 1e-6).unwrap();
    let v = |r: usize, c: usize| (d.data()[r * 3 + c] as f64 + shift).ln();
    for r in 0..3 {
        for c in 0..3 {
            let gx = if c < 2 { v(r, c + 1) - v(r, c) } else { 0.0 };
            let gy = if r < 2 { v(r + 1, c) - v(r, c) } else { 0.0 };
            assert_eq!(g.gx[r * 3 + c], gx);
            assert_eq!(g.gy[r * 3 + c], gy);
        }
    }
    assert_eq!(g.floored, 0);
}

#[test]
fn shift_that_floors_too_much_is_rejected() {
    let d = DepthRaster::from_dense(4, 4, vec![1.0; 16]).unwrap();
    assert!(matches!(log_gradient(&d, -2.0, 1e-6), Err(Error::ShiftInconsistent { floored: 16, total: 16 })));
}

#[test]
fn operator_matches_dense_matrix() {
    let mut rng = rng(1);
    let gt = random_dense(4, 4, 1.0, 3.0, &mut rng);
    let s = anchors_from(&gt, 5, &mut rng);
    for lambda in [0.0, 0.5, 3.0] {
        let a = dense_system(4, 4, &s, lambda);
        for _ in 0..5 {
            let u: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..2.0)).collect();
            let got = apply_system_operator(&u, &s, lambda).unwrap();
            let want = &a * DVector::from_vec(u.clone());
            for (g, w) in got.iter().zip(want.iter()) {
                assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
            }
        }
        let op = ScreenedPoisson::new(&s, lambda);
        for (i, d) in op.diagonal().iter().enumerate() {
            assert_eq!(*d, a[(i, i)]);
        }
    }
}

#[test]
fn operator_rejects_wrong_length() {
    let s = anchors_from(&DepthRaster::from_dense(3, 3, vec![1.0; 9]).unwrap(), 2, &mut rng(0));
    assert!(matches!(apply_system_operator(&[0.0; 8], &s, 1.0), Err(Error::Dimension(_))));
}

#[test]
fn cg_matches_dense_solve_on_small_spd_systems() {
    let mut rng = rng(2);
    for _ in 0..10 {
        let gt = random_dense(5, 5, 1.0, 3.0, &mut rng);
        let s = anchors_from(&gt, rng.random_range(1..6), &mut rng);
        let lambda = rng.random_range(0.1..10.0);
        let b: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        let op = ScreenedPoisson::new(&s, lambda);
        let (x, stats) = conjugate_gradient(&op, &b, 1e-12, 1000).unwrap();
        assert!(stats.converged);
        assert!(stats.final_relative_residual <= 1e-12);
        let want = dense_system(5, 5, &s, lambda).lu().solve(&DVector::from_vec(b)).unwrap();
        let err = (DVector::from_vec(x) - &want).norm() / want.norm();
        assert!(err <= 1e-8, "relative error {err}");
    }
}

#[test]
fn cg_stops_at_iteration_cap() {
    let mut rng = rng(3);
    let gt = random_dense(16, 16, 1.0, 3.0, &mut rng);
    let s = anchors_from(&gt, 3, &mut rng);
    let op = ScreenedPoisson::new(&s, 1.0);
    let b: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (_, stats) = conjugate_gradient(&op, &b, 1e-12, 3).unwrap();
    assert!(!stats.converged);
    assert_eq!(stats.iterations, 3);
    assert!(stats.final_relative_residual > 1e-12);
}

#[test]
fn operator_is_symmetric_and_positive() {
    let mut rng = rng(4);
    for _ in 0..50 {
        let (h, w) = (rng.random_range(2..12), rng.random_range(2..12));
        let gt = random_dense(h, w, 1.0, 3.0, &mut rng);
        let s = anchors_from(&gt, rng.random_range(1..=h * w), &mut rng);
        let lambda = rng.random_range(0.01..100.0);
        let u: Vec<f64> = (0..h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        let au = apply_system_operator(&u, &s, lambda).unwrap();
        let av = apply_system_operator(&v, &s, lambda).unwrap();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (uav, vau) = (dot(&u, &av), dot(&v, &au));
        assert!((uav - vau).abs() <= 1e-10 * (1.0 + uav.abs()));
        assert!(dot(&u, &au) > 0.0);
    }
}

#[test]
fn planar_scene_recovered_and_matches_dense_oracle() {
    let gt = DepthRaster::from_fn(4, 4, |r, c| 2.0 + 0.25 * r as f32 + 0.5 * c as f32).unwrap();
    let d_r = relative_from(&gt, Distortion::Affine { alpha: 1.5, beta: 0.5 });
    let s = SparseDepth::new(
        4,
        4,
        vec![
            depthcomp::SparseEntry { row: 0, col: 0, depth: gt.data()[0] },
            depthcomp::SparseEntry { row: 3, col: 3, depth: gt.data()[15] },
        ],
    )
    .unwrap();
    let (pred, stats) = poisson_complete(&d_r, &s, &SolverConfig::default()).unwrap();
    assert!(stats.converged);
    assert!(raster_rel(&pred, &gt) <= 1e-4);

    let shift = global_affine_align(&d_r, &s).unwrap().gamma;
    let oracle = dense_completion(&d_r, &s, shift, 1.0);
    let got: Vec<f64> = pred.data().iter().map(|&v| v as f64).collect();
    assert!(rel_error(&got, &oracle) <= 1e-6);
}

#[test]
fn completion_matches_dense_oracle_on_curved_scene() {
    for seed in 0..5 {
        let gt = smooth_depth(12, 10, seed);
        let d_r = relative_from(&gt, Distortion::Sqrt);
        let s = anchors_from(&gt, 6, &mut rng(seed + 100));
        let cfg = SolverConfig { lambda: 2.0, cg_tol: 1e-12, ..SolverConfig::default() };
        let (pred, _) = poisson_complete(&d_r, &s, &cfg).unwrap();
        let shift = global_affine_align(&d_r, &s).unwrap().gamma;
        let oracle = dense_completion(&d_r, &s, shift, 2.0);
        let got: Vec<f64> = pred.data().iter().map(|&v| v as f64).collect();
        assert!(rel_error(&got, &oracle) <= 1e-6);

        let (pred, _) = poisson_complete_no_global(&d_r, &s, &cfg).unwrap();
        let oracle = dense_completion(&d_r, &s, 0.0, 2.0);
        let got: Vec<f64> = pred.data().iter().map(|&v| v as f64).collect();
        assert!(rel_error(&got, &oracle) <= 1e-6);
    }
}

#[test]
fn self_consistent_anchors_reproduce_gt() {
    // anchors at every pixel of a log-consistent scene
    let gt = smooth_depth(8, 8, 7);
    let s = SparseDepth::from_raster(&gt);
    let (pred, _) = poisson_complete_no_global(&gt, &s, &SolverConfig::default()).unwrap();
    assert!(raster_rel(&pred, &gt) <= 1e-6);
}

#[test]
fn sqrt_distortion_beats_global_fit() {
    for seed in 0..3 {
        let gt = smooth_depth(32, 32, seed);
        let d_r = relative_from(&gt, Distortion::Sqrt);
        let s = depthcomp::sampling::sample_random(&gt, 0.03, seed).unwrap();
        let (poisson, _) = poisson_complete(&d_r, &s, &SolverConfig::default()).unwrap();
        let global = depthcomp::metrics::recover_metric(&d_r, &s).unwrap();
        assert!(raster_rel(&poisson, &gt) < raster_rel(&global, &gt));
    }
}

#[test]
fn exact_affine_recovery_across_sizes() {
    let mut rng = rng(9);
    for n in [4, 8, 16, 33, 64] {
        let gt = smooth_depth(n, n, n as u64);
        let alpha = rng.random_range(0.2..5.0);
        let beta = rng.random_range(-2.0..2.0);
        let d_r = relative_from(&gt, Distortion::Affine { alpha, beta });
        let s = anchors_from(&gt, 2 + n / 4, &mut rng);
        let (pred, _) = poisson_complete(&d_r, &s, &SolverConfig::default()).unwrap();
        assert!(raster_rel(&pred, &gt) <= 1e-4, "n={n}");
    }
}

#[test]
fn large_lambda_pins_anchors() {
    let gt = smooth_depth(16, 16, 3);
    let d_r = relative_from(&gt, Distortion::CubeRoot);
    let s = anchors_from(&gt, 10, &mut rng(3));
    let cfg = SolverConfig { lambda: 1e4, cg_tol: 1e-12, ..SolverConfig::default() };
    let (pred, _) = poisson_complete(&d_r, &s, &cfg).unwrap();
    for e in s.entries() {
        let got = pred.get(e.row, e.col).unwrap();
        assert!(((got - e.depth) / e.depth).abs() < 1e-3);
    }
}

#[test]
fn scaling_anchors_scales_output() {
    for seed in 0..4 {
        let gt = smooth_depth(16, 16, seed);
        let d_r = relative_from(&gt, Distortion::Sqrt);
        let s = anchors_from(&gt, 8, &mut rng(seed));
        let (base, _) = poisson_complete(&d_r, &s, &SolverConfig::default()).unwrap();
        for k in [0.5f32, 2.0, 10.0] {
            let (scaled, _) = poisson_complete(&d_r, &s.scaled(k).unwrap(), &SolverConfig::default()).unwrap();
            assert!(raster_rel(&scaled, &base.map_valid(|v| v * k)) <= 1e-6);
        }
    }
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let gt = smooth_depth(24, 20, 5);
    let d_r = relative_from(&gt, Distortion::Sqrt);
    let s = anchors_from(&gt, 12, &mut rng(5));
    let (a, sa) = poisson_complete(&d_r, &s, &SolverConfig::default()).unwrap();
    let (b, sb) = poisson_complete(&d_r, &s, &SolverConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(sa.iterations, sb.iterations);
    assert_eq!(sa.final_relative_residual.to_bits(), sb.final_relative_residual.to_bits());
}

#[test]
fn non_convergence_reports_partial_result() {
    let gt = smooth_depth(16, 16, 1);
    let d_r = relative_from(&gt, Distortion::Sqrt);
    let s = anchors_from(&gt, 4, &mut rng(1));
    let cfg = SolverConfig { cg_max_iter: Some(2), cg_tol: 1e-14, ..SolverConfig::default() };
    match poisson_complete(&d_r, &s, &cfg) {
        Err(Error::NotConverged { stats, partial }) => {
            assert_eq!(stats.iterations, 2);
            assert!(!stats.converged);
            assert_eq!(partial.dims(), (16, 16));
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn input_contracts() {
    let gt = smooth_depth(4, 4, 0);
    let s = anchors_from(&gt, 1, &mut rng(0));
    let cfg = SolverConfig::default();
    assert!(matches!(poisson_complete(&gt, &s, &cfg), Err(Error::TooFewAnchors { need: 2, got: 1 })));
    let s = anchors_from(&gt, 3, &mut rng(0));
    let zero = SolverConfig { lambda: 0.0, ..cfg };
    assert!(matches!(poisson_complete(&gt, &s, &zero), Err(Error::InvalidParam(_))));
    let holey = DepthRaster::from_options(4, 4, (0..16).map(|i| (i != 5).then_some(1.0))).unwrap();
    assert!(matches!(poisson_complete(&holey, &s, &cfg), Err(Error::NotDense { row: 1, col: 1 })));
}
