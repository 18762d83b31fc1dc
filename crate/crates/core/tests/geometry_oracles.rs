mod common;

use common::*;
use depthcomp::geometry::{
    affine_invariant_align, backproject, estimate_normals, extract_z, loss_global, loss_global_with, loss_local,
    loss_normal, loss_terms, total_loss,
};
use depthcomp::metrics::point_metrics;
use depthcomp::synth::{default_intrinsics, smooth_depth};
use depthcomp::{CameraIntrinsics, LossReduction, LossWeights, PointMap};
use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use std::f64::consts::FRAC_PI_6;

fn grid(h: usize, w: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> PointMap {
    let xyz = (0..h * w).map(|i| f(i / w, i % w)).collect();
    PointMap::new(h, w, xyz, vec![true; h * w]).unwrap()
}

#[test]
fn backproject_then_z_is_identity() {
    let mut rng = rng(1);
    for _ in 0..20 {
        let (h, w) = (rng.random_range(1..20), rng.random_range(1..20));
        let d = random_dense(h, w, 0.1, 50.0, &mut rng);
        let k = CameraIntrinsics::new(
            rng.random_range(10.0..500.0),
            rng.random_range(10.0..500.0),
            rng.random_range(-5.0..25.0),
            rng.random_range(-5.0..25.0),
        )
        .unwrap();
        let back = extract_z(&backproject(&d, &k));
        assert_eq!(back.mask(), d.mask());
        for (a, b) in back.data().iter().zip(d.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn tilted_plane_normals() {
    let p = grid(6, 7, |r, c| [c as f32, r as f32, 5.0 + c as f32]);
    let n = estimate_normals(&p);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut seen = 0;
    for r in 0..6 {
        for c in 0..7 {
            let border = r == 0 || c == 0 || r == 5 || c == 6;
            assert_eq!(n.get(r, c).is_some(), !border);
            if let Some(v) = n.get(r, c) {
                assert!((v[0] - s).abs() < 1e-6 && v[1].abs() < 1e-6 && (v[2] + s).abs() < 1e-6, "{v:?}");
                seen += 1;
            }
        }
    }
    assert_eq!(seen, 20);
}

#[test]
fn backprojected_plane_normals_face_camera() {
    let k = default_intrinsics(20, 20);
    let d = depthcomp::DepthRaster::from_dense(20, 20, vec![4.0; 400]).unwrap();
    let n = estimate_normals(&backproject(&d, &k));
    for v in n.n.iter().zip(&n.mask).filter(|(_, &m)| m).map(|(v, _)| v) {
        assert!(v[0].abs() < 1e-6 && v[1].abs() < 1e-6 && (v[2] + 1.0).abs() < 1e-6);
    }
}

#[test]
fn thirty_degree_tilt_gives_pi_over_six() {
    let t = FRAC_PI_6.tan();
    let flat = grid(8, 8, |r, c| [c as f32, r as f32, 5.0]);
    let tilted = grid(8, 8, |r, c| [c as f32, r as f32, (5.0 + t * c as f64) as f32]);
    let l = loss_normal(&flat, &tilted).unwrap();
    assert!((l - FRAC_PI_6).abs() < 1e-6, "{l}");
}

fn scene(seed: u64) -> (PointMap, PointMap) {
    let gt = smooth_depth(12, 14, seed);
    let k = default_intrinsics(12, 14);
    let p_hat = backproject(&gt, &k);
    let pred = backproject(&gt.map_valid(|v| v * 1.1 + 0.05 * (v * 7.0).sin()), &k);
    (pred, p_hat)
}

#[test]
fn identical_maps_have_zero_loss_and_different_maps_positive() {
    let (p, q) = scene(2);
    let w = LossWeights::default();
    assert_eq!(loss_global(&q, &q).unwrap(), 0.0);
    assert_eq!(loss_local(&q, &q, &w, 1).unwrap(), 0.0);
    assert_eq!(loss_normal(&q, &q).unwrap(), 0.0);
    assert!(loss_global(&p, &q).unwrap() > 0.0);
    assert!(loss_local(&p, &q, &w, 1).unwrap() > 0.0);
    assert!(loss_normal(&p, &q).unwrap() > 0.0);
}

fn weighted_l1(p: &PointMap, q: &PointMap, i: usize) -> f64 {
    let (a, b) = (p.points()[i], q.points()[i]);
    ((a[0] as f64 - b[0] as f64).abs() + (a[1] as f64 - b[1] as f64).abs() + (a[2] as f64 - b[2] as f64).abs())
        / b[2] as f64
}

#[test]
fn local_loss_matches_all_pairs_brute_force() {
    let (p, q) = scene(3);
    let n = p.points().len();
    let mut norms: Vec<f64> = q
        .points()
        .iter()
        .map(|v| (v[0] as f64).hypot(v[1] as f64).hypot(v[2] as f64))
        .collect();
    norms.sort_by(f64::total_cmp);
    let median = 0.5 * (norms[n / 2 - 1] + norms[n / 2]);
    let ratio = 0.05;
    let radius = ratio * median;
    let (mut sum, mut pairs) = (0.0, 0);
    for j in 0..n {
        for i in 0..n {
            let (a, b) = (q.points()[i], q.points()[j]);
            let dist = ((a[0] as f64 - b[0] as f64).powi(2)
                + (a[1] as f64 - b[1] as f64).powi(2)
                + (a[2] as f64 - b[2] as f64).powi(2))
            .sqrt();
            if dist < radius {
                sum += weighted_l1(&p, &q, i);
                pairs += 1;
            }
        }
    }
    // every pixel becomes an anchor once the count reaches |M|
    let w = LossWeights { anchor_count: 10 * n, radius_ratio: ratio, ..LossWeights::default() };
    let got = loss_local(&p, &q, &w, 9).unwrap();
    assert!((got - sum / pairs as f64).abs() <= 1e-12 * got.abs(), "{got} vs {}", sum / pairs as f64);
}

#[test]
fn covering_spheres_reduce_local_to_global() {
    let (p, q) = scene(4);
    let w = LossWeights { anchor_count: 7, radius_ratio: 1e6, ..LossWeights::default() };
    let local = loss_local(&p, &q, &w, 0).unwrap();
    let global = loss_global(&p, &q).unwrap();
    assert!((local - global).abs() <= 1e-12);
}

#[test]
fn total_is_weighted_sum_of_terms() {
    let (p, q) = scene(5);
    let w = LossWeights { lambda_local: 0.3, lambda_normal: 2.5, ..LossWeights::default() };
    let t = loss_terms(&p, &q, &w, 17).unwrap();
    let total = loss_global(&p, &q).unwrap() + 0.3 * loss_local(&p, &q, &w, 17).unwrap() + 2.5 * loss_normal(&p, &q).unwrap();
    assert_eq!(t.total.to_bits(), total.to_bits());
    assert_eq!(total_loss(&p, &q, &w, 17).unwrap().to_bits(), total.to_bits());
}

#[test]
fn sum_reduction_is_count_times_mean() {
    let (p, q) = scene(6);
    let mean = loss_global(&p, &q).unwrap();
    let sum = loss_global_with(&p, &q, LossReduction::Sum).unwrap();
    assert!((sum - mean * p.points().len() as f64).abs() < 1e-9 * sum);
}

#[test]
fn global_loss_is_scale_invariant() {
    let (p, q) = scene(7);
    let base = loss_global(&p, &q).unwrap();
    for s in [0.25, 2.0, 8.0] {
        let l = loss_global(&p.transformed(s, [0.0; 3]), &q.transformed(s, [0.0; 3])).unwrap();
        assert!((l - base).abs() < 1e-12 * base.max(1.0), "{l} vs {base}");
    }
}

#[test]
fn alignment_matches_four_by_four_normal_equations() {
    let mut rng = rng(8);
    let (p, _) = scene(8);
    let xyz = p
        .points()
        .iter()
        .map(|v| [v[0] * 1.7 + rng.random_range(-0.1..0.1f32), v[1] * 1.7 + 0.3, v[2] * 1.7 - 0.2])
        .collect();
    let q = PointMap::new(p.height(), p.width(), xyz, p.mask().to_vec()).unwrap();
    let (a, b) = affine_invariant_align(&p, &q).unwrap();

    let mut m = Matrix4::<f64>::zeros();
    let mut rhs = Vector4::<f64>::zeros();
    for (u, v) in p.points().iter().zip(q.points()) {
        for k in 0..3 {
            // residual v_k − a·u_k − b_k, unknowns (a, b_x, b_y, b_z)
            let mut row = Vector4::zeros();
            row[0] = u[k] as f64;
            row[k + 1] = 1.0;
            m += row * row.transpose();
            rhs += row * v[k] as f64;
        }
    }
    let sol = m.lu().solve(&rhs).unwrap();
    assert!((a - sol[0]).abs() <= 1e-10);
    for k in 0..3 {
        assert!((b[k] - sol[k + 1]).abs() <= 1e-10);
    }
}

#[test]
fn dyadic_transform_is_recovered_exactly() {
    let mut rng = rng(9);
    for _ in 0..20 {
        let p = grid(6, 6, |_, _| {
            [
                rng.random_range(-64..64) as f32 / 16.0,
                rng.random_range(-64..64) as f32 / 16.0,
                rng.random_range(16..128) as f32 / 16.0,
            ]
        });
        let a = rng.random_range(13..=320) as f64 / 64.0;
        let b: [f64; 3] = std::array::from_fn(|_| rng.random_range(-64..=64) as f64 / 64.0);
        let q = p.transformed(a, b);
        let (ga, gb) = affine_invariant_align(&p, &q).unwrap();
        assert!((ga - a).abs() <= 1e-10);
        for k in 0..3 {
            assert!((gb[k] - b[k]).abs() <= 1e-10);
        }
        let aligned = p.transformed(ga, gb);
        assert!(point_metrics(&aligned, &q).unwrap().rel_p <= 1e-10);
    }
}
