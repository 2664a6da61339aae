#![allow(dead_code)]

use ebpred_core::{Dataset64, Real};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || f64::standard_normal(rng))
}

/// `y = X β + noise_sd z` with the given nonzero coefficients.
pub fn linear_instance(
    n: usize,
    p: usize,
    signals: &[(usize, f64)],
    noise_sd: f64,
    seed: u64,
) -> Dataset64 {
    let mut r = rng(seed);
    let x = gaussian_matrix(n, p, &mut r);
    let mut beta = Array1::zeros(p);
    for &(j, v) in signals {
        beta[j] = v;
    }
    let mut y = x.dot(&beta);
    for v in y.iter_mut() {
        *v += noise_sd * f64::standard_normal(&mut r);
    }
    Dataset64::new(x, y).unwrap()
}

pub fn to_na(x: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[[i, j]])
}

pub fn columns(x: &Array2<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), idx.len(), |i, k| x[[i, idx[k]]])
}

/// Least squares by explicit inversion of the normal equations.
pub fn dense_ls(x: &Array2<f64>, y: &Array1<f64>, idx: &[usize]) -> (DVector<f64>, f64) {
    let yv = DVector::from_iterator(y.len(), y.iter().copied());
    if idx.is_empty() {
        return (DVector::zeros(0), yv.norm_squared());
    }
    let xs = columns(x, idx);
    let inv = (xs.transpose() * &xs)
        .try_inverse()
        .expect("invertible gram");
    let beta = &inv * xs.transpose() * &yv;
    let rss = (&yv - &xs * &beta).norm_squared();
    (beta, rss)
}

pub fn ln_binom(n: usize, k: usize) -> f64 {
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// Every subset of `0..p` with at most `max_size` elements, via bitmasks.
pub fn all_subsets(p: usize, max_size: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << p))
        .filter(|m| m.count_ones() as usize <= max_size)
        .map(|m| (0..p).filter(|j| m & (1 << j) != 0).collect())
        .collect()
}

/// Kolmogorov tail bound helper: KS critical value at level 1e-3 for `m` draws.
pub fn ks_critical(m: usize) -> f64 {
    1.95 / (m as f64).sqrt()
}
