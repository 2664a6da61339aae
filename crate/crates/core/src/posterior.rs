//! Empirical prior, fractional posterior over configurations, and the
//! closed-form conditional posteriors of `β_S` and `σ²`.
//!
//! The prior on `S` is uniform within each size class and geometric in size,
//! `π(S) ∝ C(p, |S|)⁻¹ (c p^a)^{-|S|}` for `|S| ≤ R`. The slab for `β_S` is
//! a normal centered at the least-squares estimate with covariance
//! `σ² γ⁻¹ (X_Sᵀ X_S)⁻¹`, and the likelihood enters raised to the power `α`.
//! The size-class normalizer is dropped everywhere; all weights are returned
//! on the natural-log scale up to a constant shared across configurations.

use std::cmp::Ordering;

use ndarray::Array1;
use rand::Rng;

use crate::error::{EbError, Result};
use crate::linalg::{fit_configuration, Configuration, Dataset, LsFit};
use crate::real::{ln_choose, Real};

/// Treatment of the error variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode<T: Real> {
    /// Plug-in variance supplied by the caller.
    Known { sigma2: T },
    /// Inverse-gamma prior with shape `a0` and scale `b0`.
    InverseGamma { a0: T, b0: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams<T: Real> {
    /// Likelihood fraction, in (0, 1).
    pub alpha: T,
    /// Slab precision multiplier.
    pub gamma: T,
    /// Complexity prior exponent.
    pub a: T,
    /// Complexity prior constant.
    pub c: T,
    /// Largest admissible configuration size.
    pub max_size: usize,
    pub sigma_mode: SigmaMode<T>,
    /// Permit `alpha + gamma > 1`.
    pub force: bool,
}

impl<T: Real> HyperParams<T> {
    /// α = 0.99, γ = 0.005, a = 0.05, c = 1, inverse-gamma (0.01, 4).
    pub fn defaults(max_size: usize) -> Self {
        Self {
            alpha: T::lit(0.99),
            gamma: T::lit(0.005),
            a: T::lit(0.05),
            c: T::one(),
            max_size,
            sigma_mode: SigmaMode::InverseGamma {
                a0: T::lit(0.01),
                b0: T::lit(4.0),
            },
            force: false,
        }
    }

    /// Defaults with `max_size` set to the numerical rank of `X`.
    pub fn defaults_for(data: &Dataset<T>) -> Self {
        Self::defaults(data.numerical_rank().max(1))
    }

    pub fn with_sigma_mode(mut self, mode: SigmaMode<T>) -> Self {
        self.sigma_mode = mode;
        self
    }

    pub fn with_max_size(mut self, max_size: usize) -> Self {
        self.max_size = max_size;
        self
    }

    /// Posterior precision multiplier `α + γ`.
    pub fn precision(&self) -> T {
        self.alpha + self.gamma
    }

    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        let bad = |msg: String| Err(EbError::InvalidHyperParams(msg));
        let (zero, one) = (T::zero(), T::one());
        if !(self.alpha > zero && self.alpha < one) {
            return bad(format!("alpha must lie in (0,1), got {}", self.alpha));
        }
        if !(self.gamma > zero) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.a > zero) || !(self.c > zero) {
            return bad(format!(
                "a and c must be positive, got a = {}, c = {}",
                self.a, self.c
            ));
        }
        if self.precision() > one {
            if self.force {
                log::warn!(
                    "alpha + gamma = {} exceeds 1; intervals may undercover",
                    self.precision()
                );
            } else {
                return bad(format!(
                    "alpha + gamma = {} exceeds 1 (pass force to override)",
                    self.precision()
                ));
            }
        }
        if self.max_size == 0 || self.max_size > n.min(p) {
            return bad(format!(
                "max model size must lie in [1, min(n, p) = {}], got {}",
                n.min(p),
                self.max_size
            ));
        }
        if !(self.c * T::from_usize_lossy(p).powf(self.a) > one) {
            return bad("c * p^a must exceed 1".into());
        }
        match self.sigma_mode {
            SigmaMode::Known { sigma2 } if !(sigma2 > zero && sigma2.is_finite()) => {
                bad(format!("sigma^2 must be positive, got {sigma2}"))
            }
            SigmaMode::InverseGamma { a0, b0 } if !(a0 > zero && b0 > zero) => bad(format!(
                "inverse-gamma a0, b0 must be positive, got {a0}, {b0}"
            )),
            _ => Ok(()),
        }
    }
}

/// Unnormalized log mass. `-inf` encodes zero mass; NaN is never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWeight<T: Real>(T);

impl<T: Real> LogWeight<T> {
    pub fn new(value: T) -> Self {
        assert!(!value.is_nan(), "log weight must not be NaN");
        Self(value)
    }

    pub fn zero_mass() -> Self {
        Self(T::neg_infinity())
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn is_zero_mass(self) -> bool {
        self.0 == T::neg_infinity()
    }
}

impl<T: Real> PartialOrd for LogWeight<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

/// `log Σ exp(v)`, stable against overflow. Empty or all `-inf` input gives `-inf`.
pub fn log_sum_exp<T: Real>(values: impl IntoIterator<Item = T> + Clone) -> T {
    let max = values.clone().into_iter().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    let s: T = values.into_iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// Log prior mass of `S`, without the size-class normalizer.
pub fn log_prior_config<T: Real>(
    config: &Configuration,
    hp: &HyperParams<T>,
    p: usize,
) -> LogWeight<T> {
    let s = config.len();
    if s > hp.max_size || s > p {
        return LogWeight::zero_mass();
    }
    let per_var = hp.c.ln() + hp.a * T::from_usize_lossy(p).ln();
    LogWeight::new(-ln_choose::<T>(p, s) - T::from_usize_lossy(s) * per_var)
}

fn slab_term<T: Real>(size: usize, hp: &HyperParams<T>) -> T {
    T::from_usize_lossy(size) / T::lit(2.0) * (hp.gamma / hp.precision()).ln()
}

/// Marginal log posterior of `S` with σ² known.
pub fn log_marginal_post_known<T: Real>(
    fit: &LsFit<T>,
    hp: &HyperParams<T>,
    p: usize,
) -> Result<LogWeight<T>> {
    let SigmaMode::Known { sigma2 } = hp.sigma_mode else {
        return Err(EbError::ModeMismatch(
            "known-variance weight under inverse-gamma mode",
        ));
    };
    let prior = log_prior_config(&fit.config, hp, p);
    if prior.is_zero_mass() {
        return Ok(prior);
    }
    let lik = -hp.alpha / (T::lit(2.0) * sigma2) * fit.rss;
    Ok(LogWeight::new(
        prior.value() + slab_term(fit.size(), hp) + lik,
    ))
}

/// Marginal log posterior of `S` with σ² integrated against the inverse-gamma prior.
pub fn log_marginal_post_unknown<T: Real>(
    fit: &LsFit<T>,
    hp: &HyperParams<T>,
    n: usize,
    p: usize,
) -> Result<LogWeight<T>> {
    let (shape, scale) = sigma2_posterior_params(fit, hp, n)?;
    let prior = log_prior_config(&fit.config, hp, p);
    if prior.is_zero_mass() {
        return Ok(prior);
    }
    Ok(LogWeight::new(
        prior.value() + slab_term(fit.size(), hp) - shape * scale.ln(),
    ))
}

/// Dispatch on `hp.sigma_mode`.
pub fn log_marginal_post<T: Real>(
    fit: &LsFit<T>,
    hp: &HyperParams<T>,
    n: usize,
    p: usize,
) -> LogWeight<T> {
    match hp.sigma_mode {
        SigmaMode::Known { .. } => log_marginal_post_known(fit, hp, p),
        SigmaMode::InverseGamma { .. } => log_marginal_post_unknown(fit, hp, n, p),
    }
    .expect("mode matches by construction")
}

/// Shape and scale of the inverse-gamma conditional posterior of σ² given `S`.
pub fn sigma2_posterior_params<T: Real>(
    fit: &LsFit<T>,
    hp: &HyperParams<T>,
    n: usize,
) -> Result<(T, T)> {
    let SigmaMode::InverseGamma { a0, b0 } = hp.sigma_mode else {
        return Err(EbError::ModeMismatch(
            "inverse-gamma quantity under known-variance mode",
        ));
    };
    let half_alpha = hp.alpha / T::lit(2.0);
    Ok((
        a0 + half_alpha * T::from_usize_lossy(n),
        b0 + half_alpha * fit.rss,
    ))
}

/// Draw `β_S ~ N(β̂_S, σ²/(α+γ) (X_Sᵀ X_S)⁻¹)`.
pub fn sample_beta_given_s<T: Real, R: Rng + ?Sized>(
    fit: &LsFit<T>,
    hp: &HyperParams<T>,
    sigma2: T,
    rng: &mut R,
) -> Array1<T> {
    let k = fit.size();
    if k == 0 {
        return Array1::zeros(0);
    }
    let mut z: Vec<T> = (0..k).map(|_| T::standard_normal(rng)).collect();
    fit.backward_solve(&mut z);
    let sd = (sigma2 / hp.precision()).sqrt();
    Array1::from_iter(fit.beta_hat.iter().zip(z).map(|(&b, w)| b + sd * w))
}

/// Draw σ² from its inverse-gamma conditional posterior given `S`.
pub fn sample_sigma2_given_s<T: Real, R: Rng + ?Sized>(
    fit: &LsFit<T>,
    hp: &HyperParams<T>,
    n: usize,
    rng: &mut R,
) -> Result<T> {
    let (shape, scale) = sigma2_posterior_params(fit, hp, n)?;
    Ok(scale / T::gamma(shape, rng))
}

/// One configuration of an exactly enumerated posterior.
#[derive(Debug, Clone)]
pub struct PosteriorMass<T: Real> {
    pub config: Configuration,
    pub log_weight: LogWeight<T>,
    pub probability: T,
}

pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Number of configurations of size at most `max_size` out of `p`.
pub fn model_space_size(p: usize, max_size: usize) -> u128 {
    let mut total = 0u128;
    let mut term = 1u128;
    for k in 0..=max_size.min(p) {
        if k > 0 {
            term = term * (p - k + 1) as u128 / k as u128;
        }
        total = total.saturating_add(term);
    }
    total
}

/// Visit every `k`-subset of `0..p` in lexicographic order.
pub(crate) fn for_each_subset(p: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > p {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // rightmost position that can still be advanced
        let mut i = k;
        while i > 0 && idx[i - 1] == p - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exact posterior over all admissible configurations.
///
/// Configurations whose fit is singular carry zero mass.
pub fn enumerate_posterior<T: Real>(
    data: &Dataset<T>,
    hp: &HyperParams<T>,
) -> Result<Vec<PosteriorMass<T>>> {
    let (n, p) = (data.n(), data.p());
    let count = model_space_size(p, hp.max_size);
    if count > ENUMERATION_LIMIT {
        return Err(EbError::TooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    for k in 0..=hp.max_size.min(p) {
        for_each_subset(p, k, |idx| {
            let config = Configuration::from_sorted_unchecked(idx.to_vec());
            let log_weight = match fit_configuration(data, &config) {
                Ok(fit) => log_marginal_post(&fit, hp, n, p),
                Err(_) => LogWeight::zero_mass(),
            };
            out.push(PosteriorMass {
                config,
                log_weight,
                probability: T::zero(),
            });
        });
    }
    let lse = log_sum_exp(out.iter().map(|m| m.log_weight.value()));
    if lse == T::neg_infinity() {
        return Err(EbError::InvalidData(
            "every configuration has zero mass".into(),
        ));
    }
    for m in &mut out {
        m.probability = (m.log_weight.value() - lse).exp();
    }
    Ok(out)
}

/// Marginal inclusion probability of each covariate under an enumerated posterior.
pub fn exact_inclusion_probs<T: Real>(masses: &[PosteriorMass<T>], p: usize) -> Vec<T> {
    let mut probs = vec![T::zero(); p];
    for m in masses {
        for &j in m.config.indices() {
            probs[j] += m.probability;
        }
    }
    probs
}

/// Highest-probability configuration.
pub fn posterior_mode<T: Real>(masses: &[PosteriorMass<T>]) -> Option<&PosteriorMass<T>> {
    masses.iter().max_by(|a, b| {
        a.probability
            .partial_cmp(&b.probability)
            .unwrap_or(Ordering::Equal)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn hp_known(p: usize) -> HyperParams<f64> {
        HyperParams::defaults(p.min(3)).with_sigma_mode(SigmaMode::Known { sigma2: 1.0 })
    }

    #[test]
    fn prior_ratio_for_one_more_variable() {
        let hp = HyperParams::<f64> {
            c: 1.0,
            a: 0.05,
            ..HyperParams::defaults(5)
        };
        let p = 125;
        let empty = log_prior_config(&Configuration::empty(), &hp, p).value();
        let one = log_prior_config(&Configuration::new(vec![7], p).unwrap(), &hp, p).value();
        assert!((one - empty + 1.05 * 125f64.ln()).abs() < 1e-12);

        // general binomial-ratio identity
        let s = Configuration::new(vec![1, 4], p).unwrap();
        let s_plus = s.with_added(9);
        let diff = log_prior_config(&s_plus, &hp, p).value() - log_prior_config(&s, &hp, p).value();
        let expect = -((p as f64 - 2.0) / 3.0).ln() - (hp.c.ln() + hp.a * (p as f64).ln());
        assert!((diff - expect).abs() < 1e-12);
    }

    #[test]
    fn prior_truncates_above_max_size() {
        let hp = HyperParams::<f64>::defaults(2);
        let s = Configuration::new(vec![0, 1, 2], 10).unwrap();
        assert!(log_prior_config(&s, &hp, 10).is_zero_mass());
    }

    #[test]
    fn weights_reject_wrong_mode() {
        let d = Dataset::new(Array2::eye(3), array![1.0, 2.0, 3.0]).unwrap();
        let fit = fit_configuration(&d, &Configuration::empty()).unwrap();
        let known = hp_known(3);
        let ig = HyperParams::<f64>::defaults(3);
        assert!(matches!(
            log_marginal_post_unknown(&fit, &known, 3, 3),
            Err(EbError::ModeMismatch(_))
        ));
        assert!(matches!(
            log_marginal_post_known(&fit, &ig, 3),
            Err(EbError::ModeMismatch(_))
        ));
        let mut rng = rand::rng();
        assert!(sample_sigma2_given_s(&fit, &known, 3, &mut rng).is_err());
    }

    #[test]
    fn empty_model_weights() {
        let d = Dataset::new(Array2::eye(3), array![1.0, 2.0, 3.0]).unwrap();
        let fit = fit_configuration(&d, &Configuration::empty()).unwrap();
        let hp = hp_known(3);
        let w = log_marginal_post_known(&fit, &hp, 3).unwrap().value();
        let prior = log_prior_config(&Configuration::empty(), &hp, 3).value();
        assert!((w - (prior - 0.99 / 2.0 * 14.0)).abs() < 1e-12);

        let zero = Dataset::new(Array2::eye(3), Array1::zeros(3)).unwrap();
        let fit0 = fit_configuration(&zero, &Configuration::empty()).unwrap();
        let ig = HyperParams::<f64>::defaults(3);
        let w = log_marginal_post_unknown(&fit0, &ig, 3, 3).unwrap().value();
        assert!((w - (prior - (0.01 + 0.99 * 1.5) * 4f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn subsets_enumerated_in_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        let mut count = 0;
        for_each_subset(5, 0, |_| count += 1);
        assert_eq!(count, 1);
        let mut count = 0;
        for_each_subset(3, 3, |_| count += 1);
        assert_eq!(count, 1);
        assert_eq!(model_space_size(10, 3), 176);
    }

    #[test]
    fn single_covariate_enumeration_sums_to_one() {
        let d = Dataset::new(array![[1.0], [2.0], [-1.0]], array![0.5, 2.0, -1.5]).unwrap();
        for hp in [hp_known(1), HyperParams::defaults(1)] {
            let post = enumerate_posterior(&d, &hp).unwrap();
            assert_eq!(post.len(), 2);
            let total: f64 = post.iter().map(|m| m.probability).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_large_model_space() {
        let d = Dataset::new(Array2::<f64>::eye(60), Array1::ones(60)).unwrap();
        let hp = HyperParams::defaults(10).with_sigma_mode(SigmaMode::Known { sigma2: 1.0 });
        assert!(matches!(
            enumerate_posterior(&d, &hp),
            Err(EbError::TooLarge { .. })
        ));
    }

    #[test]
    fn validation() {
        let hp = HyperParams::<f64>::defaults(5);
        assert!(hp.validate(100, 125).is_ok());
        assert!(hp.clone().with_max_size(101).validate(100, 125).is_err());
        let bad = HyperParams {
            alpha: 0.99,
            gamma: 0.05,
            ..hp.clone()
        };
        assert!(bad.validate(100, 125).is_err());
        assert!(HyperParams { force: true, ..bad }
            .validate(100, 125)
            .is_ok());
        assert!(HyperParams {
            alpha: 1.0,
            ..hp.clone()
        }
        .validate(100, 125)
        .is_err());
        assert!(HyperParams {
            c: 0.5,
            a: 0.01,
            ..hp
        }
        .validate(100, 2)
        .is_err());
    }
}
