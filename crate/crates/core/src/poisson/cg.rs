use web_time::Instant;

use super::operator::LinearOperator;
use super::SolveStats;
use crate::error::{Error, Result};
use crate::par;

/// Jacobi-preconditioned conjugate gradient, starting from zero.
///
/// Stops once `‖b − A·u‖ / ‖b‖ ≤ tol` or after `max_iter` iterations, in
/// which case `stats.converged` is false. A zero right-hand side returns
/// zero after no iterations.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    conjugate_gradient_from(op, b, vec![0.0; b.len()], tol, max_iter)
}

/// Same as [`conjugate_gradient`] but starting from `x0`. The stopping test
/// is still relative to `‖b‖`, so a good starting point only saves work.
pub fn conjugate_gradient_from(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = op.dim();
    if b.len() != n || x0.len() != n {
        return Err(Error::Dimension(format!(
            "operator of size {n} with rhs {} and start {}",
            b.len(),
            x0.len()
        )));
    }
    if let Some(i) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParam(format!("right-hand side is not finite at {i}")));
    }
    let started = Instant::now();
    let stats = |iterations, residual: f64, converged| SolveStats {
        iterations,
        final_relative_residual: residual,
        converged,
        wall_time: started.elapsed().as_secs_f64(),
    };

    let b_norm = par::norm(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], stats(0, 0.0, true)));
    }

    let inv_diag: Vec<f64> = op
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = x0;
    let mut r = residual(op, b, &x);
    let mut rel = par::norm(&r) / b_norm;
    if rel <= tol {
        return Ok((x, stats(0, rel, true)));
    }

    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, m)| a * m).collect();
    let mut p = z.clone();
    let mut rz = par::dot(&r, &z);
    let mut ap = vec![0.0; n];

    for k in 1..=max_iter {
        op.apply(&p, &mut ap);
        let curvature = par::dot(&p, &ap);
        if !curvature.is_finite() {
            return Err(Error::Breakdown { iteration: k });
        }
        if curvature <= 0.0 {
            return Err(Error::Indefinite { iteration: k, curvature });
        }
        let step = rz / curvature;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += step * pi;
            *ri -= step * api;
        }
        rel = par::norm(&r) / b_norm;
        if !rel.is_finite() {
            return Err(Error::Breakdown { iteration: k });
        }
        if rel <= tol {
            // The recurrence drifts from the true residual; only stop if the
            // true one agrees, otherwise restart from it.
            r = residual(op, b, &x);
            rel = par::norm(&r) / b_norm;
            if rel <= tol {
                return Ok((x, stats(k, rel, true)));
            }
            for ((zi, ri), m) in z.iter_mut().zip(&r).zip(&inv_diag) {
                *zi = ri * m;
            }
            p.copy_from_slice(&z);
            rz = par::dot(&r, &z);
            continue;
        }
        for ((zi, ri), m) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * m;
        }
        let rz_next = par::dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    let r = residual(op, b, &x);
    let rel = par::norm(&r) / b_norm;
    Ok((x, stats(max_iter, rel, rel <= tol)))
}

fn residual(op: &dyn LinearOperator, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut ax = vec![0.0; b.len()];
    op.apply(x, &mut ax);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Identity(usize);

    impl LinearOperator for Identity {
        fn dim(&self) -> usize {
            self.0
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            y.copy_from_slice(x);
        }
        fn diagonal(&self) -> Vec<f64> {
            vec![1.0; self.0]
        }
    }

    struct Negative;

    impl LinearOperator for Negative {
        fn dim(&self) -> usize {
            2
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            y[0] = -x[0];
            y[1] = -x[1];
        }
        fn diagonal(&self) -> Vec<f64> {
            vec![-1.0; 2]
        }
    }

    #[test]
    fn identity_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.5];
        let (u, st) = conjugate_gradient(&Identity(3), &b, 1e-10, 10).unwrap();
        assert_eq!(u, b);
        assert_eq!(st.iterations, 1);
        assert!(st.converged);
    }

    #[test]
    fn zero_rhs() {
        let (u, st) = conjugate_gradient(&Identity(4), &[0.0; 4], 1e-10, 10).unwrap();
        assert_eq!(u, vec![0.0; 4]);
        assert_eq!(st.iterations, 0);
        assert!(st.converged);
    }

    #[test]
    fn indefinite_operator_is_reported() {
        let err = conjugate_gradient(&Negative, &[1.0, 1.0], 1e-10, 10).unwrap_err();
        assert!(matches!(err, Error::Indefinite { iteration: 1, .. }));
    }

    #[test]
    fn non_finite_rhs() {
        assert!(conjugate_gradient(&Identity(2), &[f64::NAN, 1.0], 1e-10, 10).is_err());
    }
}
