//! Posterior-predictive distribution at a query point.
//!
//! Given a configuration, the predictive for a new response is a normal
//! (known σ²) or Student-t (inverse-gamma σ²) centered at `x_Sᵀ β̂_S`. The
//! full predictive is the posterior mixture of these over configurations,
//! sampled here by resampling chain states uniformly with replacement.

use std::collections::HashMap;

use ndarray::{Array1, ArrayView1};
use rand::Rng;

use crate::error::{EbError, Result};
use crate::linalg::{fit_configuration, quadratic_form, Configuration, Dataset, LsFit};
use crate::posterior::{enumerate_posterior, sigma2_posterior_params, HyperParams, SigmaMode};
use crate::real::{
    normal_cdf, normal_quantile, sample_standard_t, student_t_cdf, student_t_pdf,
    student_t_quantile, Real,
};
use crate::sampler::ConfigChain;

/// A new covariate row.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPoint<T: Real> {
    x: Array1<T>,
}

impl<T: Real> QueryPoint<T> {
    pub fn new(x: Array1<T>, p: usize) -> Result<Self> {
        if x.len() != p {
            return Err(EbError::DimensionMismatch {
                expected: p,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(EbError::InvalidData("non-finite query entry".into()));
        }
        Ok(Self { x })
    }

    pub fn x(&self) -> ArrayView1<'_, T> {
        self.x.view()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Location-scale normal or Student-t law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationScale<T: Real> {
    pub location: T,
    pub scale: T,
    /// `None` for a normal, `Some(df)` for a Student-t.
    pub df: Option<T>,
}

impl<T: Real> LocationScale<T> {
    pub fn normal(location: T, variance: T) -> Self {
        Self {
            location,
            scale: variance.sqrt(),
            df: None,
        }
    }

    pub fn variance_parameter(&self) -> T {
        self.scale * self.scale
    }

    pub fn pdf(&self, y: T) -> T {
        let z = (y - self.location) / self.scale;
        let std = match self.df {
            None => (-(z * z) / T::lit(2.0)).exp() / (T::TAU()).sqrt(),
            Some(df) => student_t_pdf(z, df),
        };
        std / self.scale
    }

    pub fn cdf(&self, y: T) -> T {
        let z = (y - self.location) / self.scale;
        match self.df {
            None => normal_cdf(z),
            Some(df) => student_t_cdf(z, df),
        }
    }

    pub fn quantile(&self, prob: T) -> T {
        let z = match self.df {
            None => normal_quantile(prob),
            Some(df) => student_t_quantile(prob, df),
        };
        self.location + self.scale * z
    }

    /// Equal-tailed interval with the given coverage.
    pub fn interval(&self, level: T) -> (T, T) {
        let tail = (T::one() - level) / T::lit(2.0);
        (self.quantile(tail), self.quantile(T::one() - tail))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let z = match self.df {
            None => T::standard_normal(rng),
            Some(df) => sample_standard_t(df, rng),
        };
        self.location + self.scale * z
    }
}

/// Predictive law of the response at `x` given configuration `S`.
///
/// Known σ²: `N(x_Sᵀβ̂_S, σ²(1 + v_S))`. Inverse-gamma σ²: Student-t with
/// `2a0 + αn` degrees of freedom, same location, squared scale
/// `(b0 + α rss / 2)/(a0 + α n / 2) · (1 + v_S)`, where
/// `v_S = x_Sᵀ(X_SᵀX_S)⁻¹x_S / (α + γ)`.
pub fn conditional_predictive<T: Real>(
    fit: &LsFit<T>,
    hp: &HyperParams<T>,
    x: &QueryPoint<T>,
    n: usize,
) -> Result<LocationScale<T>> {
    let x_s = fit.config.restrict(x.x());
    let location = fit.predict_mean(x_s.view())?;
    let inflation = T::one() + quadratic_form(fit, x_s.view())? / hp.precision();
    Ok(match hp.sigma_mode {
        SigmaMode::Known { sigma2 } => LocationScale::normal(location, sigma2 * inflation),
        SigmaMode::InverseGamma { .. } => {
            let (shape, scale) = sigma2_posterior_params(fit, hp, n)?;
            LocationScale {
                location,
                scale: (scale / shape * inflation).sqrt(),
                df: Some(shape * T::lit(2.0)),
            }
        }
    })
}

/// One draw of the new response given `S`.
pub fn predictive_draw_given_s<T: Real, R: Rng + ?Sized>(
    fit: &LsFit<T>,
    hp: &HyperParams<T>,
    x: &QueryPoint<T>,
    n: usize,
    rng: &mut R,
) -> Result<T> {
    Ok(conditional_predictive(fit, hp, x, n)?.sample(rng))
}

/// Monte Carlo sample from the predictive mixture plus its summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDraws<T: Real> {
    pub draws: Vec<T>,
    pub point_prediction: T,
    pub level: T,
    pub interval: (T, T),
}

/// Type-7 empirical quantile of sorted data.
fn sorted_quantile<T: Real>(sorted: &[T], prob: T) -> T {
    let h = T::from_usize_lossy(sorted.len() - 1) * prob;
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0).min(sorted.len() - 1);
    let frac = h - lo;
    if i + 1 < sorted.len() && frac > T::zero() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

fn sorted_copy<T: Real>(draws: &[T]) -> Vec<T> {
    let mut v = draws.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("draws are finite"));
    v
}

fn quantile_interval<T: Real>(sorted: &[T], level: T) -> (T, T) {
    let tail = (T::one() - level) / T::lit(2.0);
    (
        sorted_quantile(sorted, tail),
        sorted_quantile(sorted, T::one() - tail),
    )
}

pub const MIN_INTERVAL_DRAWS: usize = 100;

/// Empirical equal-tailed interval with linear interpolation between order statistics.
pub fn prediction_interval<T: Real>(draws: &[T], level: T) -> Result<(T, T)> {
    if draws.len() < MIN_INTERVAL_DRAWS {
        return Err(EbError::TooFewDraws {
            required: MIN_INTERVAL_DRAWS,
            got: draws.len(),
        });
    }
    if !(level > T::zero() && level < T::one()) {
        return Err(EbError::Config(format!(
            "level must lie in (0,1), got {level}"
        )));
    }
    Ok(quantile_interval(&sorted_copy(draws), level))
}

/// Conditional predictive law for every distinct state of a chain.
fn chain_components<T: Real>(
    chain: &ConfigChain<T>,
    data: &Dataset<T>,
    hp: &HyperParams<T>,
    x: &QueryPoint<T>,
) -> Result<HashMap<Configuration, LocationScale<T>>> {
    let mut out = HashMap::new();
    for s in chain.distinct_states() {
        let fit = fit_configuration(data, &s)?;
        let law = conditional_predictive(&fit, hp, x, data.n())?;
        out.insert(s, law);
    }
    Ok(out)
}

/// Sample `m` responses from the predictive mixture, drawing chain states uniformly.
pub fn sample_predictive<T: Real, R: Rng + ?Sized>(
    chain: &ConfigChain<T>,
    data: &Dataset<T>,
    hp: &HyperParams<T>,
    x: &QueryPoint<T>,
    m: usize,
    level: T,
    rng: &mut R,
) -> Result<PredictiveDraws<T>> {
    if chain.is_empty() {
        return Err(EbError::EmptyChain);
    }
    if m == 0 {
        return Err(EbError::TooFewDraws {
            required: 1,
            got: 0,
        });
    }
    if !(level > T::zero() && level < T::one()) {
        return Err(EbError::Config(format!(
            "level must lie in (0,1), got {level}"
        )));
    }
    if x.len() != data.p() {
        return Err(EbError::DimensionMismatch {
            expected: data.p(),
            got: x.len(),
        });
    }
    let laws = chain_components(chain, data, hp, x)?;
    let draws: Vec<T> = (0..m)
        .map(|_| {
            let s = &chain.states[rng.random_range(0..chain.len())];
            laws[s].sample(rng)
        })
        .collect();
    let point_prediction = draws.iter().copied().sum::<T>() / T::from_usize_lossy(m);
    let interval = quantile_interval(&sorted_copy(&draws), level);
    Ok(PredictiveDraws {
        draws,
        point_prediction,
        level,
        interval,
    })
}

/// Mixture of location-scale laws.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveMixture<T: Real> {
    pub components: Vec<(T, LocationScale<T>)>,
}

impl<T: Real> PredictiveMixture<T> {
    pub fn cdf(&self, y: T) -> T {
        self.components.iter().map(|(w, c)| *w * c.cdf(y)).sum()
    }

    pub fn pdf(&self, y: T) -> T {
        self.components.iter().map(|(w, c)| *w * c.pdf(y)).sum()
    }

    pub fn mean(&self) -> T {
        self.components.iter().map(|(w, c)| *w * c.location).sum()
    }
}

/// Exact predictive mixture over every admissible configuration (small `p` only).
pub fn exact_predictive_mixture<T: Real>(
    data: &Dataset<T>,
    hp: &HyperParams<T>,
    x: &QueryPoint<T>,
) -> Result<PredictiveMixture<T>> {
    let masses = enumerate_posterior(data, hp)?;
    let mut components = Vec::new();
    for m in masses.into_iter().filter(|m| m.probability > T::zero()) {
        let fit = fit_configuration(data, &m.config)?;
        components.push((
            m.probability,
            conditional_predictive(&fit, hp, x, data.n())?,
        ));
    }
    Ok(PredictiveMixture { components })
}

/// Predictive law under a known configuration `S*`.
pub fn oracle_predictive<T: Real>(
    data: &Dataset<T>,
    hp: &HyperParams<T>,
    s_star: &Configuration,
    x: &QueryPoint<T>,
) -> Result<LocationScale<T>> {
    let fit = fit_configuration(data, s_star)?;
    conditional_predictive(&fit, hp, x, data.n())
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic<T: Real>(sample: &[T], cdf: impl Fn(T) -> T) -> T {
    let sorted = sorted_copy(sample);
    let m = T::from_usize_lossy(sorted.len());
    let mut d = T::zero();
    for (i, &v) in sorted.iter().enumerate() {
        let f = cdf(v);
        let above = T::from_usize_lossy(i + 1) / m - f;
        let below = f - T::from_usize_lossy(i) / m;
        d = d.max(above).max(below);
    }
    d
}

/// Empirical CDF of sorted data at `y`.
fn ecdf<T: Real>(sorted: &[T], y: T) -> T {
    let k = sorted.partition_point(|&v| v <= y);
    T::from_usize_lossy(k) / T::from_usize_lossy(sorted.len())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvmDiagnostic<T: Real> {
    pub ks: T,
    /// Mean |empirical CDF - oracle CDF| over an evenly spaced grid.
    pub mean_abs_diff: T,
}

pub const BVM_GRID_POINTS: usize = 401;

/// Compare predictive draws against the oracle predictive at `S*`.
#[allow(clippy::too_many_arguments)]
pub fn bvm_diagnostic<T: Real, R: Rng + ?Sized>(
    chain: &ConfigChain<T>,
    data: &Dataset<T>,
    hp: &HyperParams<T>,
    s_star: &Configuration,
    x: &QueryPoint<T>,
    m: usize,
    rng: &mut R,
) -> Result<(BvmDiagnostic<T>, PredictiveDraws<T>, LocationScale<T>)> {
    let oracle = oracle_predictive(data, hp, s_star, x)?;
    let draws = sample_predictive(chain, data, hp, x, m, T::lit(0.95), rng)?;
    let diag = compare_to_law(&draws.draws, &oracle);
    Ok((diag, draws, oracle))
}

/// KS distance and grid-averaged CDF gap between a sample and a law.
pub fn compare_to_law<T: Real>(sample: &[T], law: &LocationScale<T>) -> BvmDiagnostic<T> {
    let ks = ks_statistic(sample, |y| law.cdf(y));
    let sorted = sorted_copy(sample);
    let (lo, hi) = oracle_grid_range(law);
    let steps = T::from_usize_lossy(BVM_GRID_POINTS - 1);
    let total: T = (0..BVM_GRID_POINTS)
        .map(|i| {
            let g = lo + (hi - lo) * T::from_usize_lossy(i) / steps;
            (ecdf(&sorted, g) - law.cdf(g)).abs()
        })
        .sum();
    BvmDiagnostic {
        ks,
        mean_abs_diff: total / T::from_usize_lossy(BVM_GRID_POINTS),
    }
}

/// Plotting/diagnostic grid: location ± 5 scales.
pub fn oracle_grid_range<T: Real>(law: &LocationScale<T>) -> (T, T) {
    let half = T::lit(5.0) * law.scale;
    (law.location - half, law.location + half)
}

/// Evenly spaced `(y, density)` pairs over the diagnostic grid.
pub fn density_grid<T: Real>(law: &LocationScale<T>, points: usize) -> Vec<(T, T)> {
    let (lo, hi) = oracle_grid_range(law);
    let steps = T::from_usize_lossy(points.max(2) - 1);
    (0..points.max(2))
        .map(|i| {
            let g = lo + (hi - lo) * T::from_usize_lossy(i) / steps;
            (g, law.pdf(g))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_draws_give_degenerate_interval() {
        let draws = vec![2.5f64; 200];
        assert_eq!(prediction_interval(&draws, 0.95).unwrap(), (2.5, 2.5));
    }

    #[test]
    fn too_few_draws_rejected() {
        let draws = vec![0.0f64; 99];
        assert!(matches!(
            prediction_interval(&draws, 0.9),
            Err(EbError::TooFewDraws { .. })
        ));
        assert!(prediction_interval(&vec![0.0f64; 100], 1.0).is_err());
    }

    #[test]
    fn interpolated_quantiles() {
        let v: Vec<f64> = (0..=100).map(f64::from).collect();
        let (lo, hi) = prediction_interval(&v, 0.9).unwrap();
        assert!((lo - 5.0).abs() < 1e-12 && (hi - 95.0).abs() < 1e-12);
        let v: Vec<f64> = (0..100).map(f64::from).collect();
        // h = 99 * 0.025 = 2.475
        let (lo, _) = prediction_interval(&v, 0.95).unwrap();
        assert!((lo - 2.475).abs() < 1e-12);
    }

    #[test]
    fn standard_normal_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| f64::standard_normal(&mut rng))
            .collect();
        let (lo, hi) = prediction_interval(&draws, 0.95).unwrap();
        assert!((lo + 1.96).abs() < 0.01, "{lo}");
        assert!((hi - 1.96).abs() < 0.01, "{hi}");
    }

    #[test]
    fn normal_law_peak_and_mass() {
        let law = LocationScale::normal(1.5f64, 2.0);
        let peak = 1.0 / (2.0 * std::f64::consts::PI * 2.0).sqrt();
        assert!((law.pdf(1.5) - peak).abs() < 1e-14);
        let grid = density_grid(&law, 4001);
        let h = grid[1].0 - grid[0].0;
        let area: f64 = grid.windows(2).map(|w| 0.5 * h * (w[0].1 + w[1].1)).sum();
        assert!((area - 1.0).abs() < 1e-4);
    }

    #[test]
    fn student_law_integrates_to_one() {
        let law = LocationScale {
            location: -0.3f64,
            scale: 1.2,
            df: Some(12.0),
        };
        let n = 200_001;
        let (lo, hi) = (-200.0, 200.0);
        let h = (hi - lo) / (n - 1) as f64;
        let area: f64 = (0..n - 1)
            .map(|i| {
                let a = lo + i as f64 * h;
                0.5 * h * (law.pdf(a) + law.pdf(a + h))
            })
            .sum();
        assert!((area - 1.0).abs() < 1e-4, "{area}");
        let (l, u) = law.interval(0.95);
        assert!((law.cdf(u) - law.cdf(l) - 0.95).abs() < 1e-8);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let m = 1000;
        let law = LocationScale::normal(0.0f64, 1.0);
        let sample: Vec<f64> = (0..m)
            .map(|i| law.quantile((i as f64 + 0.5) / m as f64))
            .collect();
        let d = ks_statistic(&sample, |y| law.cdf(y));
        assert!((d - 0.5 / m as f64).abs() < 1e-9);
    }
}
