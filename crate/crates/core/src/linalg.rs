//! Per-configuration least-squares fits.
//!
//! Every downstream quantity (marginal posterior weights, conditional draws,
//! predictive variances) is a function of the least-squares fit of `y` on the
//! active columns `X_S`. A fit is refactored from scratch for each
//! configuration; sizes stay small enough that up/downdating is not needed.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, ShapeBuilder};

use crate::error::{EbError, Result};
use crate::real::Real;

/// Design matrix and response vector.
///
/// `x` is held in column-major order so that column extraction is contiguous.
#[derive(Debug, Clone)]
pub struct Dataset<T: Real> {
    x: Array2<T>,
    y: Array1<T>,
    y_norm_sq: T,
}

impl<T: Real> Dataset<T> {
    pub fn new(x: Array2<T>, y: Array1<T>) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(EbError::InvalidData(format!(
                "design must be non-empty, got {n}x{p}"
            )));
        }
        if y.len() != n {
            return Err(EbError::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(EbError::InvalidData("non-finite entry in X or y".into()));
        }
        let mut xf = Array2::zeros((n, p).f());
        xf.assign(&x);
        let y_norm_sq = y.iter().map(|&v| v * v).sum();
        Ok(Self {
            x: xf,
            y,
            y_norm_sq,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<T> {
        &self.x
    }

    pub fn y(&self) -> &Array1<T> {
        &self.y
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, T> {
        self.x.column(j)
    }

    pub fn y_norm_sq(&self) -> T {
        self.y_norm_sq
    }

    /// Copy of the dataset restricted to the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let x = self.x.select(ndarray::Axis(0), rows);
        let y = self.y.select(ndarray::Axis(0), rows);
        Self::new(x, y)
    }

    /// Numerical rank of `X`, via a pivoted Cholesky of the smaller Gram matrix.
    pub fn numerical_rank(&self) -> usize {
        let gram = if self.n() <= self.p() {
            self.x.dot(&self.x.t())
        } else {
            self.x.t().dot(&self.x)
        };
        pivoted_cholesky_rank(gram)
    }

    /// Index of the column with the largest absolute Pearson correlation with `y`.
    pub fn most_correlated_column(&self) -> Option<usize> {
        let n = T::from_usize_lossy(self.n());
        let y_mean = self.y.sum() / n;
        let yc: Array1<T> = self.y.mapv(|v| v - y_mean);
        let y_ss: T = yc.dot(&yc);
        let mut best: Option<(usize, T)> = None;
        for j in 0..self.p() {
            let col = self.column(j);
            let m = col.sum() / n;
            let mut sxy = T::zero();
            let mut sxx = T::zero();
            for (&xv, &yv) in col.iter().zip(yc.iter()) {
                sxy += (xv - m) * yv;
                sxx += (xv - m) * (xv - m);
            }
            if sxx <= T::zero() {
                continue;
            }
            let denom = (sxx * y_ss).sqrt();
            let r = if denom > T::zero() {
                (sxy / denom).abs()
            } else {
                T::zero()
            };
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((j, r));
            }
        }
        best.map(|(j, _)| j)
    }
}

fn pivoted_cholesky_rank<T: Real>(mut a: Array2<T>) -> usize {
    let m = a.nrows();
    let max_diag = (0..m).map(|i| a[[i, i]]).fold(T::zero(), T::max);
    if max_diag <= T::zero() {
        return 0;
    }
    let tol = T::tolerance() * max_diag;
    let mut perm: Vec<usize> = (0..m).collect();
    for k in 0..m {
        // pick the largest remaining diagonal
        let (piv, &dmax) = perm[k..]
            .iter()
            .enumerate()
            .map(|(i, &pi)| (i + k, &a[[pi, pi]]))
            .max_by(|l, r| l.1.partial_cmp(r.1).unwrap())
            .unwrap();
        if dmax <= tol {
            return k;
        }
        perm.swap(k, piv);
        let pk = perm[k];
        let root = dmax.sqrt();
        for &pi in &perm[k + 1..] {
            a[[pi, pk]] /= root;
        }
        for (ii, &pi) in perm.iter().enumerate().skip(k + 1) {
            for &pj in &perm[k + 1..=ii] {
                let update = a[[pi, pk]] * a[[pj, pk]];
                a[[pi, pj]] -= update;
                if pi != pj {
                    a[[pj, pi]] = a[[pi, pj]];
                }
            }
        }
    }
    m
}

/// An ordered set of active covariate indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Configuration {
    indices: Vec<usize>,
}

impl Configuration {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Build from arbitrary-order indices; rejects duplicates and indices `>= p`.
    pub fn new(mut indices: Vec<usize>, p: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(EbError::InvalidConfiguration(format!(
                "duplicate index in {indices:?}"
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= p {
                return Err(EbError::InvalidConfiguration(format!(
                    "index {last} out of bounds for p = {p}"
                )));
            }
        }
        Ok(Self { indices })
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn with_added(&self, j: usize) -> Self {
        let mut indices = self.indices.clone();
        match indices.binary_search(&j) {
            Ok(_) => {}
            Err(pos) => indices.insert(pos, j),
        }
        Self { indices }
    }

    pub fn without(&self, j: usize) -> Self {
        let indices = self.indices.iter().copied().filter(|&i| i != j).collect();
        Self { indices }
    }

    /// Entries of a full-length vector at the active indices.
    pub fn restrict<T: Real>(&self, x: ArrayView1<'_, T>) -> Array1<T> {
        self.indices.iter().map(|&j| x[j]).collect()
    }
}

impl fmt::Display for Configuration {
    /// Space-separated indices; the empty configuration prints as an empty string.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for j in &self.indices {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{j}")?;
            first = false;
        }
        Ok(())
    }
}

/// Least-squares fit of `y` on `X_S`.
#[derive(Debug, Clone)]
pub struct LsFit<T: Real> {
    pub config: Configuration,
    pub beta_hat: Array1<T>,
    /// Lower-triangular `L` with `L Lᵀ = X_Sᵀ X_S`.
    pub chol: Array2<T>,
    pub rss: T,
    pub fitted: Array1<T>,
}

impl<T: Real> LsFit<T> {
    pub fn size(&self) -> usize {
        self.config.len()
    }

    /// `x_Sᵀ β̂_S`.
    pub fn predict_mean(&self, x_s: ArrayView1<'_, T>) -> Result<T> {
        if x_s.len() != self.size() {
            return Err(EbError::DimensionMismatch {
                expected: self.size(),
                got: x_s.len(),
            });
        }
        Ok(x_s.dot(&self.beta_hat))
    }

    /// Solve `L z = b` in place.
    pub(crate) fn forward_solve(&self, b: &mut [T]) {
        forward_substitute(&self.chol, b);
    }

    /// Solve `Lᵀ z = b` in place.
    pub(crate) fn backward_solve(&self, b: &mut [T]) {
        backward_substitute(&self.chol, b);
    }
}

fn forward_substitute<T: Real>(l: &Array2<T>, b: &mut [T]) {
    for i in 0..b.len() {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[[i, k]] * b[k];
        }
        b[i] = acc / l[[i, i]];
    }
}

fn backward_substitute<T: Real>(l: &Array2<T>, b: &mut [T]) {
    for i in (0..b.len()).rev() {
        let mut acc = b[i];
        for k in i + 1..b.len() {
            acc -= l[[k, i]] * b[k];
        }
        b[i] = acc / l[[i, i]];
    }
}

/// Cholesky factor of a symmetric positive-definite matrix.
///
/// A pivot (the remaining diagonal before the square root) at or below
/// `tolerance * max_diag` is reported as [`EbError::SingularDesign`].
pub fn cholesky<T: Real>(a: &Array2<T>) -> Result<Array2<T>> {
    let k = a.nrows();
    let max_diag = (0..k).map(|i| a[[i, i]]).fold(T::zero(), T::max);
    let tol = T::tolerance() * max_diag;
    let mut l = Array2::<T>::zeros((k, k));
    for j in 0..k {
        let mut d = a[[j, j]];
        for m in 0..j {
            d -= l[[j, m]] * l[[j, m]];
        }
        if !(d > tol) {
            return Err(EbError::SingularDesign {
                column: j,
                pivot: d.as_f64(),
            });
        }
        let root = d.sqrt();
        l[[j, j]] = root;
        for i in j + 1..k {
            let mut s = a[[i, j]];
            for m in 0..j {
                s -= l[[i, m]] * l[[j, m]];
            }
            l[[i, j]] = s / root;
        }
    }
    Ok(l)
}

/// Least-squares fit of `y` on the columns in `config`.
pub fn fit_configuration<T: Real>(data: &Dataset<T>, config: &Configuration) -> Result<LsFit<T>> {
    let k = config.len();
    let n = data.n();
    if let Some(&last) = config.indices().last() {
        if last >= data.p() {
            return Err(EbError::InvalidConfiguration(format!(
                "index {last} out of bounds for p = {}",
                data.p()
            )));
        }
    }
    if k > n {
        return Err(EbError::SingularDesign {
            column: n,
            pivot: 0.0,
        });
    }
    if k == 0 {
        return Ok(LsFit {
            config: config.clone(),
            beta_hat: Array1::zeros(0),
            chol: Array2::zeros((0, 0)),
            rss: data.y_norm_sq(),
            fitted: Array1::zeros(n),
        });
    }

    let cols: Vec<ArrayView1<'_, T>> = config.indices().iter().map(|&j| data.column(j)).collect();
    let mut gram = Array2::<T>::zeros((k, k));
    let mut xty = vec![T::zero(); k];
    for a in 0..k {
        for b in 0..=a {
            let v = cols[a].dot(&cols[b]);
            gram[[a, b]] = v;
            gram[[b, a]] = v;
        }
        xty[a] = cols[a].dot(data.y());
    }
    let chol = cholesky(&gram)?;
    let mut beta = xty;
    forward_substitute(&chol, &mut beta);
    backward_substitute(&chol, &mut beta);

    let mut fitted = Array1::<T>::zeros(n);
    for (col, &b) in cols.iter().zip(beta.iter()) {
        fitted.scaled_add(b, col);
    }
    let rss = data
        .y()
        .iter()
        .zip(fitted.iter())
        .map(|(&yv, &fv)| (yv - fv) * (yv - fv))
        .sum();

    Ok(LsFit {
        config: config.clone(),
        beta_hat: Array1::from(beta),
        chol,
        rss,
        fitted,
    })
}

/// `x_Sᵀ (X_Sᵀ X_S)⁻¹ x_S`, computed as `‖L⁻¹ x_S‖²`.
pub fn quadratic_form<T: Real>(fit: &LsFit<T>, x_s: ArrayView1<'_, T>) -> Result<T> {
    if x_s.len() != fit.size() {
        return Err(EbError::DimensionMismatch {
            expected: fit.size(),
            got: x_s.len(),
        });
    }
    let mut w: Vec<T> = x_s.to_vec();
    fit.forward_solve(&mut w);
    Ok(w.iter().map(|&v| v * v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn identity3() -> Dataset<f64> {
        Dataset::new(Array2::eye(3), array![1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn identity_design_recovers_response() {
        let d = identity3();
        let s = Configuration::new(vec![0, 1, 2], 3).unwrap();
        let fit = fit_configuration(&d, &s).unwrap();
        assert_eq!(fit.beta_hat.to_vec(), vec![1.0, 2.0, 3.0]);
        assert!(fit.rss.abs() < 1e-14);
    }

    #[test]
    fn empty_configuration_is_zero_fit() {
        let d = identity3();
        let fit = fit_configuration(&d, &Configuration::empty()).unwrap();
        assert!(fit.beta_hat.is_empty());
        assert!(fit.fitted.iter().all(|&v| v == 0.0));
        assert_eq!(fit.rss, 14.0);
    }

    #[test]
    fn duplicated_column_is_singular() {
        let x = array![[1.0, 1.0], [2.0, 2.0], [0.5, 0.5]];
        let d = Dataset::new(x, array![1.0, 0.0, 2.0]).unwrap();
        let s = Configuration::new(vec![0, 1], 2).unwrap();
        assert!(matches!(
            fit_configuration(&d, &s),
            Err(EbError::SingularDesign { column: 1, .. })
        ));
    }

    #[test]
    fn quadratic_form_identity_gram() {
        let d = identity3();
        let s = Configuration::new(vec![0, 2], 3).unwrap();
        let fit = fit_configuration(&d, &s).unwrap();
        assert!((quadratic_form(&fit, array![1.0, 0.0].view()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(quadratic_form(&fit, array![0.0, 0.0].view()).unwrap(), 0.0);
        assert!(matches!(
            quadratic_form(&fit, array![1.0].view()),
            Err(EbError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn configuration_validation() {
        assert!(Configuration::new(vec![1, 1], 3).is_err());
        assert!(Configuration::new(vec![3], 3).is_err());
        let s = Configuration::new(vec![2, 0], 3).unwrap();
        assert_eq!(s.indices(), &[0, 2]);
        assert_eq!(s.with_added(1).indices(), &[0, 1, 2]);
        assert_eq!(s.without(0).indices(), &[2]);
        assert_eq!(s.to_string(), "0 2");
    }

    #[test]
    fn dataset_rejects_bad_input() {
        assert!(Dataset::new(Array2::<f64>::zeros((0, 2)), Array1::zeros(0)).is_err());
        assert!(Dataset::new(Array2::<f64>::zeros((2, 2)), Array1::zeros(3)).is_err());
        let mut x = Array2::<f64>::zeros((2, 2));
        x[[0, 1]] = f64::NAN;
        assert!(Dataset::new(x, Array1::zeros(2)).is_err());
    }

    #[test]
    fn rank_of_duplicated_columns() {
        let x = array![
            [1.0, 1.0, 0.0],
            [2.0, 2.0, 1.0],
            [0.5, 0.5, 3.0],
            [1.0, 1.0, 1.0]
        ];
        let d = Dataset::new(x, array![1.0, 0.0, 2.0, 1.0]).unwrap();
        assert_eq!(d.numerical_rank(), 2);
        assert_eq!(identity3().numerical_rank(), 3);
    }

    #[test]
    fn generic_over_f32() {
        let x = array![[1.0f32, 0.0], [0.0, 2.0], [1.0, 1.0]];
        let d = Dataset::new(x, array![1.0f32, 2.0, 2.0]).unwrap();
        let fit = fit_configuration(&d, &Configuration::new(vec![0, 1], 2).unwrap()).unwrap();
        assert!(fit.rss >= 0.0);
        assert_eq!(fit.beta_hat.len(), 2);
    }
}
