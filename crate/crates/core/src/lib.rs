//! Empirical-Bayes posterior and posterior-predictive distributions for
//! sparse high-dimensional linear regression.
//!
//! The prior on the nonzero coefficients is a conjugate normal slab centered
//! at the least-squares estimate of each configuration, and the likelihood is
//! raised to a fractional power. Conjugacy makes the marginal posterior of the
//! configuration available in closed form; a Metropolis–Hastings walk over
//! configurations then drives Monte Carlo draws from the predictive mixture.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the CLI
//! and the simulation harness use.
//!
//! ```
//! use ebpred_core::{Dataset64, HyperParams64, McmcSettings, SigmaMode, run_chain};
//! use ndarray::{array, Array2};
//!
//! let x = Array2::from_shape_fn((6, 3), |(i, j)| ((i * 3 + j) as f64).sin());
//! let y = array![0.3, -1.2, 0.8, 1.9, -0.4, 0.1];
//! let data = Dataset64::new(x, y).unwrap();
//! let hp = HyperParams64::defaults(2).with_sigma_mode(SigmaMode::Known { sigma2: 1.0 });
//! let settings = McmcSettings { iters: 2_000, burnin: 500, ..Default::default() };
//! let chain = run_chain(&data, &hp, &settings).unwrap();
//! assert_eq!(chain.len(), 1_500);
//! ```

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod posterior;
pub mod predictive;
pub mod real;
pub mod sampler;
pub mod simulate;

pub use error::{EbError, Result};
pub use linalg::{fit_configuration, quadratic_form, Configuration, Dataset, LsFit};
pub use posterior::{
    enumerate_posterior, log_marginal_post, log_marginal_post_known, log_marginal_post_unknown,
    log_prior_config, log_sum_exp, sample_beta_given_s, sample_sigma2_given_s, HyperParams,
    LogWeight, PosteriorMass, SigmaMode,
};
pub use predictive::{
    bvm_diagnostic, exact_predictive_mixture, oracle_predictive, prediction_interval,
    predictive_draw_given_s, sample_predictive, BvmDiagnostic, LocationScale, PredictiveDraws,
    PredictiveMixture, QueryPoint,
};
pub use real::Real;
pub use sampler::{
    inclusion_probs, mh_step, propose, run_chain, ConfigChain, McmcSettings, ProposalKind,
};
pub use simulate::{
    gen_design, gen_response, run_bvm_experiment, run_experiment, run_split_benchmark,
    ExperimentReport, FitSpec, SimSetting, SplitReport,
};

pub type Dataset64 = Dataset<f64>;
pub type LsFit64 = LsFit<f64>;
pub type HyperParams64 = HyperParams<f64>;
pub type SigmaMode64 = SigmaMode<f64>;
pub type LogWeight64 = LogWeight<f64>;
pub type ConfigChain64 = ConfigChain<f64>;
pub type QueryPoint64 = QueryPoint<f64>;
pub type PredictiveDraws64 = PredictiveDraws<f64>;
pub type SimSetting64 = SimSetting<f64>;
pub type FitSpec64 = FitSpec<f64>;
pub type ExperimentReport64 = ExperimentReport<f64>;

pub type Dataset32 = Dataset<f32>;
pub type HyperParams32 = HyperParams<f32>;
pub type ConfigChain32 = ConfigChain<f32>;
