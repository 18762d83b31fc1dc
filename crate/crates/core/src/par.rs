//! Row-parallel helpers that produce identical results with or without threads.

const BLOCK: usize = 4096;

/// Fills `out` row by row; `f(row, row_slice)` must only depend on its inputs.
pub(crate) fn for_each_row<T, F>(out: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(width)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(width).enumerate().for_each(|(r, row)| f(r, row));
    }
}

/// Dot product with fixed-size blocks summed in block order.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partial = |(x, y): (&[f64], &[f64])| -> f64 { x.iter().zip(y).map(|(p, q)| p * q).sum() };
    #[cfg(feature = "parallel")]
    let blocks: Vec<f64> = {
        use rayon::prelude::*;
        a.par_chunks(BLOCK)
            .zip(b.par_chunks(BLOCK))
            .map(partial)
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let blocks: Vec<f64> = a.chunks(BLOCK).zip(b.chunks(BLOCK)).map(partial).collect();
    blocks.iter().sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
