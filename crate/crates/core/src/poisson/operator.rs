use crate::error::{Error, Result};
use crate::par;
use crate::types::SparseDepth;

/// Symmetric linear map applied without assembling a matrix.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y ← A·x`
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Main diagonal, used for Jacobi preconditioning.
    fn diagonal(&self) -> Vec<f64>;
}

/// `∇ᵀ∇ + λ·MᵀM` on an `height × width` grid: the 4-neighbour graph
/// Laplacian with Neumann boundaries plus `λ` at every anchor pixel.
#[derive(Clone, Debug)]
pub struct ScreenedPoisson {
    height: usize,
    width: usize,
    screen: Vec<f64>,
}

impl ScreenedPoisson {
    pub fn new(s: &SparseDepth, lambda: f64) -> Self {
        let (height, width) = s.dims();
        let mut screen = vec![0.0; height * width];
        for e in s.entries() {
            screen[e.row * width + e.col] = lambda;
        }
        Self { height, width, screen }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

impl LinearOperator for ScreenedPoisson {
    fn dim(&self) -> usize {
        self.height * self.width
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (h, w) = (self.height, self.width);
        par::for_each_row(y, w, |r, out| {
            let base = r * w;
            for (c, slot) in out.iter_mut().enumerate() {
                let i = base + c;
                let xi = x[i];
                let mut acc = 0.0;
                if r > 0 {
                    acc += xi - x[i - w];
                }
                if c > 0 {
                    acc += xi - x[i - 1];
                }
                if c + 1 < w {
                    acc += xi - x[i + 1];
                }
                if r + 1 < h {
                    acc += xi - x[i + w];
                }
                *slot = acc + self.screen[i] * xi;
            }
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        let mut d = vec![0.0; h * w];
        for r in 0..h {
            for c in 0..w {
                let degree = (r > 0) as usize + (c > 0) as usize + (c + 1 < w) as usize + (r + 1 < h) as usize;
                d[r * w + c] = degree as f64 + self.screen[r * w + c];
            }
        }
        d
    }
}

/// `A·u` for the screened system defined by the anchor set and `lambda`.
pub fn apply_system_operator(u: &[f64], s: &SparseDepth, lambda: f64) -> Result<Vec<f64>> {
    let n = s.height() * s.width();
    if u.len() != n {
        return Err(Error::Dimension(format!(
            "vector has {} entries, grid {}x{} needs {n}",
            u.len(),
            s.height(),
            s.width()
        )));
    }
    let op = ScreenedPoisson::new(s, lambda);
    let mut y = vec![0.0; n];
    op.apply(u, &mut y);
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SparseEntry;

    #[test]
    fn constants_are_in_the_null_space() {
        let s = SparseDepth::new(3, 4, vec![]).unwrap();
        let y = apply_system_operator(&[2.5; 12], &s, 1.0).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_edge() {
        let s = SparseDepth::new(1, 2, vec![]).unwrap();
        assert_eq!(apply_system_operator(&[0.0, 1.0], &s, 0.0).unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn anchors_add_lambda() {
        let s = SparseDepth::new(1, 2, vec![SparseEntry { row: 0, col: 1, depth: 1.0 }]).unwrap();
        assert_eq!(apply_system_operator(&[1.0, 1.0], &s, 3.0).unwrap(), vec![0.0, 3.0]);
        let op = ScreenedPoisson::new(&s, 3.0);
        assert_eq!(op.diagonal(), vec![1.0, 4.0]);
    }

    #[test]
    fn length_mismatch() {
        let s = SparseDepth::new(2, 2, vec![]).unwrap();
        assert!(matches!(apply_system_operator(&[0.0; 3], &s, 1.0), Err(Error::Dimension(_))));
    }
}
