//! Metropolis–Hastings random walk over configurations.
//!
//! Proposals add, remove, or swap a single index, chosen uniformly among the
//! moves available at the current size. The Hastings ratio accounts for the
//! boundary cases (`S = ∅` can only grow, `|S| = R` can only shrink or swap).

use std::collections::HashMap;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{EbError, Result};
use crate::linalg::{fit_configuration, Configuration, Dataset};
use crate::posterior::{
    log_marginal_post, sample_sigma2_given_s, HyperParams, LogWeight, SigmaMode,
};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProposalKind {
    Add,
    Remove,
    Swap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal<T: Real> {
    pub kind: ProposalKind,
    pub config: Configuration,
    /// `log q(S | S') - log q(S' | S)`.
    pub log_ratio: T,
}

/// Moves available from a configuration of size `s`.
pub fn available_moves(s: usize, p: usize, max_size: usize) -> Vec<ProposalKind> {
    let mut moves = Vec::with_capacity(3);
    if s < max_size && s < p {
        moves.push(ProposalKind::Add);
    }
    if s > 0 {
        moves.push(ProposalKind::Remove);
        if s < p {
            moves.push(ProposalKind::Swap);
        }
    }
    moves
}

/// Uniform draw of an index in `0..p` not contained in `config`.
fn draw_excluded<R: Rng + ?Sized>(config: &Configuration, p: usize, rng: &mut R) -> usize {
    let mut r = rng.random_range(0..p - config.len());
    // walk the gaps between sorted active indices
    for &j in config.indices() {
        if r < j {
            break;
        }
        r += 1;
    }
    r
}

fn log_n_moves<T: Real>(s: usize, p: usize, max_size: usize) -> T {
    T::from_usize_lossy(available_moves(s, p, max_size).len()).ln()
}

pub fn propose<T: Real, R: Rng + ?Sized>(
    config: &Configuration,
    p: usize,
    max_size: usize,
    rng: &mut R,
) -> Proposal<T> {
    let s = config.len();
    let moves = available_moves(s, p, max_size);
    let kind = moves[rng.random_range(0..moves.len())];
    let ln = |k: usize| T::from_usize_lossy(k).ln();
    let forward_pick = log_n_moves::<T>(s, p, max_size);
    match kind {
        ProposalKind::Add => {
            let j = draw_excluded(config, p, rng);
            // forward: pick Add, then one of p - s; reverse: pick Remove, then one of s + 1
            let log_fwd = -forward_pick - ln(p - s);
            let log_rev = -log_n_moves::<T>(s + 1, p, max_size) - ln(s + 1);
            Proposal {
                kind,
                config: config.with_added(j),
                log_ratio: log_rev - log_fwd,
            }
        }
        ProposalKind::Remove => {
            let j = config.indices()[rng.random_range(0..s)];
            let log_fwd = -forward_pick - ln(s);
            let log_rev = -log_n_moves::<T>(s - 1, p, max_size) - ln(p - s + 1);
            Proposal {
                kind,
                config: config.without(j),
                log_ratio: log_rev - log_fwd,
            }
        }
        ProposalKind::Swap => {
            let out = config.indices()[rng.random_range(0..s)];
            let inn = draw_excluded(config, p, rng);
            Proposal {
                kind,
                config: config.without(out).with_added(inn),
                log_ratio: T::zero(),
            }
        }
    }
}

/// `min(1, exp(log_target_ratio + log_proposal_ratio))`; zero when the candidate has no mass.
pub fn acceptance_probability<T: Real>(
    current: LogWeight<T>,
    candidate: LogWeight<T>,
    log_ratio: T,
) -> T {
    if candidate.is_zero_mass() {
        return T::zero();
    }
    if current.is_zero_mass() {
        return T::one();
    }
    let a = candidate.value() - current.value() + log_ratio;
    if a >= T::zero() {
        T::one()
    } else {
        a.exp()
    }
}

/// One MH transition against an arbitrary log target over configurations.
pub fn mh_step_with<T, F, R>(
    config: &Configuration,
    log_weight: LogWeight<T>,
    p: usize,
    max_size: usize,
    mut target: F,
    rng: &mut R,
) -> (Configuration, LogWeight<T>, bool)
where
    T: Real,
    F: FnMut(&Configuration) -> LogWeight<T>,
    R: Rng + ?Sized,
{
    let proposal = propose::<T, R>(config, p, max_size, rng);
    let candidate = target(&proposal.config);
    let a = acceptance_probability(log_weight, candidate, proposal.log_ratio);
    let accept = a >= T::one() || (a > T::zero() && T::unit_uniform(rng) < a);
    if accept {
        (proposal.config, candidate, true)
    } else {
        (config.clone(), log_weight, false)
    }
}

/// Marginal log posterior of a configuration; singular fits carry zero mass.
pub fn config_log_weight<T: Real>(
    data: &Dataset<T>,
    hp: &HyperParams<T>,
    config: &Configuration,
) -> LogWeight<T> {
    match fit_configuration(data, config) {
        Ok(fit) => log_marginal_post(&fit, hp, data.n(), data.p()),
        Err(_) => LogWeight::zero_mass(),
    }
}

/// One MH transition targeting the empirical-Bayes posterior over configurations.
pub fn mh_step<T: Real, R: Rng + ?Sized>(
    config: &Configuration,
    log_weight: LogWeight<T>,
    data: &Dataset<T>,
    hp: &HyperParams<T>,
    rng: &mut R,
) -> (Configuration, LogWeight<T>, bool) {
    mh_step_with(
        config,
        log_weight,
        data.p(),
        hp.max_size,
        |s| config_log_weight(data, hp, s),
        rng,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McmcSettings {
    /// Total transitions, burn-in included.
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    /// Attach a σ² draw to each retained state (inverse-gamma mode only).
    pub draw_sigma2: bool,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self {
            iters: 20_000,
            burnin: 5_000,
            thin: 1,
            seed: 0,
            draw_sigma2: false,
        }
    }
}

impl McmcSettings {
    pub fn validate(&self) -> Result<()> {
        if self.iters <= self.burnin {
            return Err(EbError::Config(format!(
                "iters ({}) must exceed burnin ({})",
                self.iters, self.burnin
            )));
        }
        if self.thin == 0 {
            return Err(EbError::Config("thin must be at least 1".into()));
        }
        Ok(())
    }
}

/// Retained output of a configuration-space chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigChain<T: Real> {
    pub states: Vec<Configuration>,
    pub log_weights: Vec<LogWeight<T>>,
    pub sigma2_draws: Option<Vec<T>>,
    /// Accepted transitions over all `steps`, burn-in included.
    pub accept_count: usize,
    pub steps: usize,
    pub seed: u64,
}

impl<T: Real> ConfigChain<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accept_count as f64 / self.steps as f64
        }
    }

    /// Visit frequency of each distinct configuration, most frequent first
    /// (ties broken by configuration order).
    pub fn state_frequencies(&self) -> Vec<(Configuration, f64)> {
        let mut counts: HashMap<&Configuration, usize> = HashMap::new();
        for s in &self.states {
            *counts.entry(s).or_default() += 1;
        }
        let total = self.states.len() as f64;
        let mut out: Vec<(Configuration, f64)> = counts
            .into_iter()
            .map(|(s, c)| (s.clone(), c as f64 / total))
            .collect();
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        out
    }

    pub fn modal_state(&self) -> Option<Configuration> {
        self.state_frequencies().into_iter().next().map(|(s, _)| s)
    }

    pub fn distinct_states(&self) -> Vec<Configuration> {
        let mut v = self.states.clone();
        v.sort();
        v.dedup();
        v
    }
}

/// Initial state: the single-covariate model with the largest |corr(x_j, y)|,
/// falling back to the empty model if that fit has no mass.
pub fn initial_state<T: Real>(
    data: &Dataset<T>,
    hp: &HyperParams<T>,
) -> (Configuration, LogWeight<T>) {
    if let Some(j) = data.most_correlated_column() {
        let s = Configuration::from_sorted_unchecked(vec![j]);
        let w = config_log_weight(data, hp, &s);
        if !w.is_zero_mass() {
            return (s, w);
        }
    }
    let s = Configuration::empty();
    let w = config_log_weight(data, hp, &s);
    (s, w)
}

/// Run a chain from the deterministic initial state.
pub fn run_chain<T: Real>(
    data: &Dataset<T>,
    hp: &HyperParams<T>,
    settings: &McmcSettings,
) -> Result<ConfigChain<T>> {
    settings.validate()?;
    hp.validate(data.n(), data.p())?;
    let draw_sigma2 =
        settings.draw_sigma2 && matches!(hp.sigma_mode, SigmaMode::InverseGamma { .. });

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    // σ² draws use their own stream so the state path does not depend on them
    let mut sigma_rng = ChaCha8Rng::seed_from_u64(settings.seed);
    sigma_rng.set_stream(1);

    let (mut state, mut weight) = initial_state(data, hp);
    let mut cache: HashMap<Configuration, LogWeight<T>> = HashMap::new();
    cache.insert(state.clone(), weight);

    let retained = (settings.iters - settings.burnin).div_ceil(settings.thin);
    let mut chain = ConfigChain {
        states: Vec::with_capacity(retained),
        log_weights: Vec::with_capacity(retained),
        sigma2_draws: draw_sigma2.then(|| Vec::with_capacity(retained)),
        accept_count: 0,
        steps: settings.iters,
        seed: settings.seed,
    };

    let (p, max_size) = (data.p(), hp.max_size);
    for it in 0..settings.iters {
        let (next, w, accepted) = mh_step_with(
            &state,
            weight,
            p,
            max_size,
            |s| {
                *cache
                    .entry(s.clone())
                    .or_insert_with(|| config_log_weight(data, hp, s))
            },
            &mut rng,
        );
        state = next;
        weight = w;
        chain.accept_count += usize::from(accepted);
        if it >= settings.burnin && (it - settings.burnin).is_multiple_of(settings.thin) {
            if let Some(draws) = chain.sigma2_draws.as_mut() {
                let fit = fit_configuration(data, &state)?;
                draws.push(sample_sigma2_given_s(&fit, hp, data.n(), &mut sigma_rng)?);
            }
            chain.states.push(state.clone());
            chain.log_weights.push(weight);
        }
    }
    Ok(chain)
}

/// Per-index inclusion frequency across retained states.
pub fn inclusion_probs<T: Real>(chain: &ConfigChain<T>, p: usize) -> Result<Vec<f64>> {
    if chain.is_empty() {
        return Err(EbError::EmptyChain);
    }
    let mut counts = vec![0usize; p];
    for s in &chain.states {
        for &j in s.indices() {
            counts[j] += 1;
        }
    }
    let total = chain.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Posterior mean of `β`, averaging the conditional means `β̂_S` over retained states.
pub fn posterior_mean_beta<T: Real>(
    chain: &ConfigChain<T>,
    data: &Dataset<T>,
) -> Result<Array1<T>> {
    if chain.is_empty() {
        return Err(EbError::EmptyChain);
    }
    let mut mean = Array1::<T>::zeros(data.p());
    for (s, freq) in chain.state_frequencies() {
        let fit = fit_configuration(data, &s)?;
        let w = T::lit(freq);
        for (&j, &b) in s.indices().iter().zip(fit.beta_hat.iter()) {
            mean[j] += w * b;
        }
    }
    Ok(mean)
}
