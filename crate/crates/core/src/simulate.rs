//! Synthetic AR(1) designs, replicated prediction experiments and random
//! train/test split benchmarks.

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{EbError, Result};
use crate::linalg::{fit_configuration, Configuration, Dataset};
use crate::posterior::{HyperParams, SigmaMode};
use crate::predictive::{
    bvm_diagnostic, conditional_predictive, density_grid, sample_predictive, BvmDiagnostic,
    LocationScale, PredictiveDraws, QueryPoint,
};
use crate::real::Real;
use crate::sampler::{run_chain, ConfigChain, McmcSettings};

/// Default signal positions, 0-based.
pub const DEFAULT_SIGNALS: [usize; 5] = [2, 3, 14, 21, 24];

#[derive(Debug, Clone, PartialEq)]
pub struct SimSetting<T: Real> {
    pub n: usize,
    pub p: usize,
    /// Common value of the non-zero coefficients.
    pub signal: T,
    /// AR(1) correlation between neighbouring covariates.
    pub rho: T,
    /// 0-based positions of the non-zero coefficients.
    pub signal_positions: Vec<usize>,
    pub reps: usize,
    pub noise_sd: T,
    pub seed: u64,
    /// Fresh test points per replication.
    pub test_batch: usize,
}

impl<T: Real> Default for SimSetting<T> {
    fn default() -> Self {
        Self {
            n: 100,
            p: 125,
            signal: T::lit(2.0),
            rho: T::lit(0.2),
            signal_positions: DEFAULT_SIGNALS.to_vec(),
            reps: 250,
            noise_sd: T::one(),
            seed: 0,
            test_batch: 1,
        }
    }
}

impl<T: Real> SimSetting<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EbError::Config(m));
        if self.n == 0 || self.p == 0 {
            return bad("n and p must be positive".into());
        }
        if self.reps == 0 || self.test_batch == 0 {
            return bad("reps and test batch must be at least 1".into());
        }
        if !(self.rho.abs() < T::one()) {
            return bad(format!(
                "AR(1) correlation must lie in (-1,1), got {}",
                self.rho
            ));
        }
        if !(self.noise_sd >= T::zero()) {
            return bad(format!(
                "noise sd must be non-negative, got {}",
                self.noise_sd
            ));
        }
        if let Some(&j) = self.signal_positions.iter().find(|&&j| j >= self.p) {
            return bad(format!(
                "signal position {j} out of range for p = {}",
                self.p
            ));
        }
        Configuration::new(self.signal_positions.clone(), self.p)?;
        Ok(())
    }

    pub fn true_configuration(&self) -> Configuration {
        Configuration::new(self.signal_positions.clone(), self.p)
            .expect("validated signal positions")
    }

    pub fn beta_star(&self) -> Array1<T> {
        let mut b = Array1::zeros(self.p);
        for &j in &self.signal_positions {
            b[j] = self.signal;
        }
        b
    }
}

/// `rows` i.i.d. draws from `N_p(0, Σ)` with `Σ_jk = ρ^|j-k|`.
pub fn gen_ar1_rows<T: Real, R: Rng + ?Sized>(
    rows: usize,
    p: usize,
    rho: T,
    rng: &mut R,
) -> Array2<T> {
    let innov = (T::one() - rho * rho).sqrt();
    let mut x = Array2::zeros((rows, p));
    for mut row in x.rows_mut() {
        let mut prev = T::standard_normal(rng);
        row[0] = prev;
        for j in 1..p {
            prev = rho * prev + innov * T::standard_normal(rng);
            row[j] = prev;
        }
    }
    x
}

pub fn gen_design<T: Real, R: Rng + ?Sized>(setting: &SimSetting<T>, rng: &mut R) -> Array2<T> {
    gen_ar1_rows(setting.n, setting.p, setting.rho, rng)
}

/// `y = X β* + noise_sd · z`.
pub fn gen_response<T: Real, R: Rng + ?Sized>(
    x: &Array2<T>,
    setting: &SimSetting<T>,
    rng: &mut R,
) -> (Array1<T>, Array1<T>) {
    let beta = setting.beta_star();
    let mut y = x.dot(&beta);
    for v in y.iter_mut() {
        *v += setting.noise_sd * T::standard_normal(rng);
    }
    (y, beta)
}

/// Generator for replication `rep` of a run with the given master seed.
pub fn replication_rng(master_seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(rep as u64 + 1);
    rng
}

/// Model and sampler settings shared by every replication.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec<T: Real> {
    /// `max_size` is replaced per dataset when `max_size_override` is `None`.
    pub hp: HyperParams<T>,
    /// Cap on configuration size; defaults to the numerical rank of `X`.
    pub max_size_override: Option<usize>,
    /// Seed is ignored; each replication derives its own.
    pub mcmc: McmcSettings,
    /// Predictive Monte Carlo size.
    pub m: usize,
    pub level: T,
}

impl<T: Real> FitSpec<T> {
    pub fn new(hp: HyperParams<T>) -> Self {
        Self {
            hp,
            max_size_override: None,
            mcmc: McmcSettings::default(),
            m: 10_000,
            level: T::lit(0.95),
        }
    }

    pub fn hp_for(&self, data: &Dataset<T>) -> HyperParams<T> {
        let max_size = self
            .max_size_override
            .unwrap_or_else(|| data.numerical_rank())
            .min(data.n().min(data.p()))
            .max(1);
        self.hp.clone().with_max_size(max_size)
    }

    fn chain(&self, data: &Dataset<T>, hp: &HyperParams<T>, seed: u64) -> Result<ConfigChain<T>> {
        let settings = McmcSettings { seed, ..self.mcmc };
        run_chain(data, hp, &settings)
    }
}

/// Outcome of one replication, averaged over its test points.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord<T: Real> {
    pub replication: usize,
    pub chain_seed: u64,
    pub squared_error: T,
    pub coverage: T,
    pub length: T,
    pub oracle_length: T,
    pub oracle_coverage: T,
    /// Squared error of the oracle location on the same test point(s).
    pub oracle_squared_error: T,
    pub acceptance_rate: f64,
    pub modal_config: Configuration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport<T: Real> {
    pub mspe: T,
    pub coverage: T,
    pub mean_length: T,
    pub oracle_length: T,
    pub oracle_coverage: T,
    pub oracle_mspe: T,
    pub wall_clock_secs: f64,
    pub records: Vec<ReplicationRecord<T>>,
}

fn run_replication<T: Real>(
    setting: &SimSetting<T>,
    spec: &FitSpec<T>,
    rep: usize,
) -> Result<ReplicationRecord<T>> {
    let mut rng = replication_rng(setting.seed, rep);
    let x = gen_design(setting, &mut rng);
    let (y, beta) = gen_response(&x, setting, &mut rng);
    let x_new = gen_ar1_rows(setting.test_batch, setting.p, setting.rho, &mut rng);
    let y_new: Vec<T> = x_new
        .rows()
        .into_iter()
        .map(|row| row.dot(&beta) + setting.noise_sd * T::standard_normal(&mut rng))
        .collect();
    let chain_seed = rng.next_u64();

    let data = Dataset::new(x, y)?;
    let hp = spec.hp_for(&data);
    let chain = spec.chain(&data, &hp, chain_seed)?;

    let oracle_hp = hp.clone().with_sigma_mode(SigmaMode::Known {
        sigma2: setting.noise_sd * setting.noise_sd,
    });
    let oracle_fit = fit_configuration(&data, &setting.true_configuration())?;

    let mut sq = T::zero();
    let mut covered = 0usize;
    let mut length = T::zero();
    let mut oracle_len = T::zero();
    let mut oracle_cov = 0usize;
    let mut oracle_sq = T::zero();
    for (row, &target) in x_new.rows().into_iter().zip(&y_new) {
        let q = QueryPoint::new(row.to_owned(), setting.p)?;
        let pred = sample_predictive(&chain, &data, &hp, &q, spec.m, spec.level, &mut rng)?;
        let (lo, hi) = pred.interval;
        sq += (pred.point_prediction - target) * (pred.point_prediction - target);
        covered += usize::from(lo <= target && target <= hi);
        length += hi - lo;

        let oracle = conditional_predictive(&oracle_fit, &oracle_hp, &q, data.n())?;
        let (olo, ohi) = oracle.interval(spec.level);
        oracle_len += ohi - olo;
        oracle_cov += usize::from(olo <= target && target <= ohi);
        oracle_sq += (oracle.location - target) * (oracle.location - target);
    }
    let b = T::from_usize_lossy(setting.test_batch);
    Ok(ReplicationRecord {
        replication: rep,
        chain_seed,
        squared_error: sq / b,
        coverage: T::from_usize_lossy(covered) / b,
        length: length / b,
        oracle_length: oracle_len / b,
        oracle_coverage: T::from_usize_lossy(oracle_cov) / b,
        oracle_squared_error: oracle_sq / b,
        acceptance_rate: chain.acceptance_rate(),
        modal_config: chain.modal_state().unwrap_or_default(),
    })
}

/// Replicated simulation: fresh data, chain, and test point(s) per replication.
///
/// Replications run on the current rayon pool; the reduction is sequential so
/// results do not depend on the thread count.
pub fn run_experiment<T: Real>(
    setting: &SimSetting<T>,
    spec: &FitSpec<T>,
) -> Result<ExperimentReport<T>> {
    setting.validate()?;
    spec.mcmc.validate()?;
    let start = Instant::now();
    let results: Vec<Result<ReplicationRecord<T>>> = (0..setting.reps)
        .into_par_iter()
        .map(|rep| {
            run_replication(setting, spec, rep).map_err(|e| EbError::Replication {
                replication: rep,
                seed: setting.seed,
                source: Box::new(e),
            })
        })
        .collect();
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let reps = T::from_usize_lossy(records.len());
    let avg = |f: fn(&ReplicationRecord<T>) -> T| records.iter().map(f).sum::<T>() / reps;
    Ok(ExperimentReport {
        mspe: avg(|r| r.squared_error),
        coverage: avg(|r| r.coverage),
        mean_length: avg(|r| r.length),
        oracle_length: avg(|r| r.oracle_length),
        oracle_coverage: avg(|r| r.oracle_coverage),
        oracle_mspe: avg(|r| r.oracle_squared_error),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        records,
    })
}

/// `n⁻¹ ‖X (β̄ − β*)‖²`.
pub fn in_sample_prediction_error<T: Real>(
    x: &Array2<T>,
    beta_bar: ArrayView1<'_, T>,
    beta_star: ArrayView1<'_, T>,
) -> T {
    let diff = &beta_bar - &beta_star;
    let fitted = x.dot(&diff);
    fitted.dot(&fitted) / T::from_usize_lossy(x.nrows())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRecord<T: Real> {
    pub split: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub mspe: T,
    /// Sample variance of the held-out responses.
    pub test_variance: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport<T: Real> {
    pub mean_mspe: T,
    pub splits: Vec<SplitRecord<T>>,
}

fn column_means<T: Real>(x: &Array2<T>) -> Array1<T> {
    x.mean_axis(Axis(0)).expect("non-empty design")
}

fn sample_variance<T: Real>(v: &[T]) -> T {
    if v.len() < 2 {
        return T::zero();
    }
    let n = T::from_usize_lossy(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    v.iter().map(|&a| (a - mean) * (a - mean)).sum::<T>() / (n - T::one())
}

/// Repeated random train/test splits; out-of-sample MSPE per split.
///
/// Covariates and response are centered with training means before fitting,
/// since the model has no intercept.
pub fn run_split_benchmark<T: Real>(
    data: &Dataset<T>,
    train_frac: T,
    splits: usize,
    spec: &FitSpec<T>,
    seed: u64,
) -> Result<SplitReport<T>> {
    if !(train_frac > T::zero() && train_frac < T::one()) {
        return Err(EbError::Config(format!(
            "training fraction must lie in (0,1), got {train_frac}"
        )));
    }
    if splits == 0 {
        return Err(EbError::Config("need at least one split".into()));
    }
    let n = data.n();
    if n < 2 {
        return Err(EbError::InvalidData(
            "need at least two rows to split".into(),
        ));
    }
    let n_train = (train_frac * T::from_usize_lossy(n))
        .round()
        .to_usize()
        .unwrap_or(1)
        .clamp(1, n - 1);

    let mut records = Vec::with_capacity(splits);
    for split in 0..splits {
        let mut rng = replication_rng(seed, split);
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        let (train_rows, test_rows) = rows.split_at(n_train);

        let train = data.select_rows(train_rows)?;
        let x_mean = column_means(train.x());
        let y_mean = train.y().mean().expect("non-empty");
        let train = Dataset::new(train.x() - &x_mean, train.y().mapv(|v| v - y_mean))?;
        let hp = spec.hp_for(&train);
        let chain = spec.chain(&train, &hp, rng.next_u64())?;

        let mut sq = T::zero();
        let mut held_out = Vec::with_capacity(test_rows.len());
        for &i in test_rows {
            let q = QueryPoint::new(&data.x().row(i) - &x_mean, data.p())?;
            let pred = sample_predictive(&chain, &train, &hp, &q, spec.m, spec.level, &mut rng)?;
            let target = data.y()[i];
            let err = pred.point_prediction + y_mean - target;
            sq += err * err;
            held_out.push(target);
        }
        records.push(SplitRecord {
            split,
            n_train,
            n_test: test_rows.len(),
            mspe: sq / T::from_usize_lossy(test_rows.len()),
            test_variance: sample_variance(&held_out),
        });
    }
    let mean_mspe = records.iter().map(|r| r.mspe).sum::<T>() / T::from_usize_lossy(splits);
    Ok(SplitReport {
        mean_mspe,
        splits: records,
    })
}

/// Output of the predictive-versus-oracle comparison at a single query point.
#[derive(Debug, Clone)]
pub struct BvmRun<T: Real> {
    pub diagnostic: BvmDiagnostic<T>,
    pub draws: PredictiveDraws<T>,
    pub oracle: LocationScale<T>,
    pub density: Vec<(T, T)>,
    pub modal_config: Configuration,
}

pub const DENSITY_GRID_POINTS: usize = 201;

/// Fit one synthetic dataset and compare the predictive at a fresh query
/// point with the oracle predictive at the true configuration.
pub fn run_bvm_experiment<T: Real>(
    setting: &SimSetting<T>,
    spec: &FitSpec<T>,
) -> Result<BvmRun<T>> {
    setting.validate()?;
    let mut rng = replication_rng(setting.seed, 0);
    let x = gen_design(setting, &mut rng);
    let (y, _) = gen_response(&x, setting, &mut rng);
    let x_new = gen_ar1_rows(1, setting.p, setting.rho, &mut rng);
    let data = Dataset::new(x, y)?;
    let hp = spec.hp_for(&data);
    let chain = spec.chain(&data, &hp, rng.next_u64())?;
    let q = QueryPoint::new(x_new.row(0).to_owned(), setting.p)?;
    let (diagnostic, draws, oracle) = bvm_diagnostic(
        &chain,
        &data,
        &hp,
        &setting.true_configuration(),
        &q,
        spec.m,
        &mut rng,
    )?;
    Ok(BvmRun {
        diagnostic,
        draws,
        density: density_grid(&oracle, DENSITY_GRID_POINTS),
        oracle,
        modal_config: chain.modal_state().unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_star_layout() {
        let s = SimSetting::<f64> {
            p: 30,
            signal: 4.0,
            ..Default::default()
        };
        let b = s.beta_star();
        assert_eq!(b.iter().filter(|&&v| v == 4.0).count(), 5);
        for &j in &DEFAULT_SIGNALS {
            assert_eq!(b[j], 4.0);
        }
    }

    #[test]
    fn noiseless_response_is_exact() {
        let s = SimSetting::<f64> {
            n: 20,
            p: 30,
            noise_sd: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = gen_design(&s, &mut rng);
        let (y, b) = gen_response(&x, &s, &mut rng);
        let exact = x.dot(&b);
        assert!(y.iter().zip(exact.iter()).all(|(a, b)| a == b));
    }

    #[test]
    fn setting_validation() {
        let ok = SimSetting::<f64>::default();
        assert!(ok.validate().is_ok());
        assert!(SimSetting {
            p: 20,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(SimSetting {
            rho: 1.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(SimSetting {
            reps: 0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(SimSetting {
            signal_positions: vec![3, 3],
            ..ok
        }
        .validate()
        .is_err());
    }

    #[test]
    fn replication_streams_differ() {
        let a = replication_rng(9, 0).next_u64();
        let b = replication_rng(9, 1).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, replication_rng(9, 0).next_u64());
    }

    #[test]
    fn split_benchmark_rejects_bad_fraction() {
        let d = Dataset::new(Array2::<f64>::eye(4), Array1::ones(4)).unwrap();
        let spec = FitSpec::new(HyperParams::defaults(1));
        assert!(run_split_benchmark(&d, 1.0, 2, &spec, 0).is_err());
        assert!(run_split_benchmark(&d, 0.5, 0, &spec, 0).is_err());
    }
}
