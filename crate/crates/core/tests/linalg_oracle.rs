mod common;

use common::{columns, dense_ls, gaussian_matrix, rng};
use ebpred_core::{fit_configuration, quadratic_form, Configuration, Dataset64};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

#[test]
fn beta_hat_matches_dense_normal_equations() {
    let mut r = rng(101);
    let x = gaussian_matrix(10, 4, &mut r);
    let y = Array1::from_iter(gaussian_matrix(10, 1, &mut r).iter().copied());
    let data = Dataset64::new(x.clone(), y.clone()).unwrap();
    let s = Configuration::new(vec![1, 3], 4).unwrap();
    let fit = fit_configuration(&data, &s).unwrap();
    let (beta, rss) = dense_ls(&x, &y, &[1, 3]);
    for k in 0..2 {
        assert!((fit.beta_hat[k] - beta[k]).abs() < 1e-10 * (1.0 + beta[k].abs()));
    }
    assert!((fit.rss - rss).abs() < 1e-10 * (1.0 + rss));
}

#[test]
fn quadratic_form_matches_dense_inverse_on_random_instances() {
    let mut r = rng(102);
    for trial in 0..100 {
        let k = 1 + trial % 10;
        let n = k + 5 + trial % 7;
        let x = gaussian_matrix(n, k, &mut r);
        let y = Array1::zeros(n);
        let data = Dataset64::new(x.clone(), y).unwrap();
        let idx: Vec<usize> = (0..k).collect();
        let fit = fit_configuration(&data, &Configuration::new(idx.clone(), k).unwrap()).unwrap();
        let xs = Array1::from_iter(gaussian_matrix(k, 1, &mut r).iter().copied());
        let got = quadratic_form(&fit, xs.view()).unwrap();

        let g = columns(&x, &idx);
        let inv = (g.transpose() * &g).try_inverse().unwrap();
        let v = nalgebra::DVector::from_iterator(k, xs.iter().copied());
        let want = (v.transpose() * inv * &v)[(0, 0)];
        assert!(got >= 0.0);
        assert!(
            (got - want).abs() <= 1e-8 * want.abs(),
            "trial {trial}: {got} vs {want}"
        );
    }
}

#[test]
fn quadratic_form_fixed_instance() {
    let mut r = rng(103);
    let x = gaussian_matrix(8, 3, &mut r);
    let data = Dataset64::new(x.clone(), Array1::zeros(8)).unwrap();
    let fit = fit_configuration(&data, &Configuration::new(vec![0, 1, 2], 3).unwrap()).unwrap();
    let xs = ndarray::array![1.0, -1.0, 2.0];
    let g = columns(&x, &[0, 1, 2]);
    let inv = (g.transpose() * &g).try_inverse().unwrap();
    let v = nalgebra::DVector::from_vec(vec![1.0, -1.0, 2.0]);
    let want = (v.transpose() * inv * &v)[(0, 0)];
    let got = quadratic_form(&fit, xs.view()).unwrap();
    assert!((got - want).abs() <= 1e-10 * want);
}

#[test]
fn orthonormal_columns_give_unit_quadratic_form() {
    // columns of a 4x4 Hadamard matrix scaled to unit norm
    let h = ndarray::array![
        [1.0, 1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0]
    ] / 2.0;
    let data = Dataset64::new(h, Array1::ones(4)).unwrap();
    let fit = fit_configuration(&data, &Configuration::new(vec![1, 2], 4).unwrap()).unwrap();
    let q = quadratic_form(&fit, ndarray::array![0.0, 1.0].view()).unwrap();
    assert!((q - 1.0).abs() < 1e-14);
}

fn instance(n: usize, p: usize, seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut r = rng(seed);
    let x = gaussian_matrix(n, p, &mut r);
    let y = Array1::from_iter(gaussian_matrix(n, 1, &mut r).iter().copied());
    (x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cholesky_reconstructs_gram(seed in 0u64..10_000, k in 1usize..8) {
        let (x, y) = instance(k + 6, k, seed);
        let data = Dataset64::new(x.clone(), y).unwrap();
        let idx: Vec<usize> = (0..k).collect();
        let fit = fit_configuration(&data, &Configuration::new(idx.clone(), k).unwrap()).unwrap();
        let gram = x.t().dot(&x);
        let rebuilt = fit.chol.dot(&fit.chol.t());
        let scale = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = (&rebuilt - &gram).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(err <= 1e-10 * scale);
        prop_assert!(fit.rss >= 0.0);
    }

    #[test]
    fn rss_is_monotone_under_inclusion(seed in 0u64..10_000, mask in 1u32..(1 << 6), extra in 0usize..6) {
        let (x, y) = instance(15, 6, seed);
        let data = Dataset64::new(x, y).unwrap();
        let small: Vec<usize> = (0..6).filter(|j| mask & (1 << j) != 0).collect();
        let s = Configuration::new(small, 6).unwrap();
        let big = s.with_added(extra);
        let a = fit_configuration(&data, &s).unwrap();
        let b = fit_configuration(&data, &big).unwrap();
        prop_assert!(b.rss <= a.rss + 1e-9 * data.y_norm_sq());
    }
}
