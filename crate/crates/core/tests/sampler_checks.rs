mod common;

use std::collections::HashMap;

use common::{linear_instance, rng};
use ebpred_core::posterior::{exact_inclusion_probs, posterior_mode};
use ebpred_core::sampler::mh_step_with;
use ebpred_core::{
    enumerate_posterior, inclusion_probs, propose, run_chain, Configuration, HyperParams64,
    LogWeight, McmcSettings, ProposalKind, SigmaMode,
};

fn known() -> SigmaMode<f64> {
    SigmaMode::Known { sigma2: 1.0 }
}

fn total_variation(chain_freq: &[(Configuration, f64)], exact: &[(Configuration, f64)]) -> f64 {
    let emp: HashMap<&Configuration, f64> = chain_freq.iter().map(|(s, f)| (s, *f)).collect();
    let mut tv = 0.0;
    for (s, p) in exact {
        tv += (emp.get(s).copied().unwrap_or(0.0) - p).abs();
    }
    // states visited but absent from the enumeration (none expected)
    for (s, f) in chain_freq {
        if !exact.iter().any(|(e, _)| e == s) {
            tv += f;
        }
    }
    tv / 2.0
}

#[test]
fn chain_matches_enumeration_on_p10_instance() {
    let data = linear_instance(12, 10, &[(2, 1.5), (6, -1.0)], 1.0, 301);
    let hp = HyperParams64::defaults(3).with_sigma_mode(known());
    let exact = enumerate_posterior(&data, &hp).unwrap();
    let settings = McmcSettings {
        iters: 205_000,
        burnin: 5_000,
        thin: 1,
        seed: 302,
        draw_sigma2: false,
    };
    let chain = run_chain(&data, &hp, &settings).unwrap();
    let exact_pairs: Vec<_> = exact
        .iter()
        .map(|m| (m.config.clone(), m.probability))
        .collect();
    let tv = total_variation(&chain.state_frequencies(), &exact_pairs);
    assert!(tv < 0.02, "tv = {tv}");

    let incl = inclusion_probs(&chain, 10).unwrap();
    let exact_incl = exact_inclusion_probs(&exact, 10);
    for j in 0..10 {
        assert!((incl[j] - exact_incl[j]).abs() < 0.02, "index {j}");
        assert!((0.0..=1.0).contains(&incl[j]));
    }
    assert!(chain.states.iter().all(|s| s.len() <= 3));
}

#[test]
fn three_model_toy_detailed_balance() {
    // p = 2, R = 1: models {}, {0}, {1}
    let targets: HashMap<Configuration, f64> = [
        (Configuration::empty(), 0.2f64.ln()),
        (Configuration::new(vec![0], 2).unwrap(), 0.5f64.ln()),
        (Configuration::new(vec![1], 2).unwrap(), 0.3f64.ln()),
    ]
    .into_iter()
    .collect();
    let mut r = rng(303);
    let mut state = Configuration::empty();
    let mut weight = LogWeight::new(targets[&state]);
    let mut counts: HashMap<Configuration, usize> = HashMap::new();
    let steps = 400_000;
    for _ in 0..steps {
        let (s, w, _) = mh_step_with(&state, weight, 2, 1, |c| LogWeight::new(targets[c]), &mut r);
        state = s;
        weight = w;
        *counts.entry(state.clone()).or_default() += 1;
    }
    let tv: f64 = targets
        .iter()
        .map(|(s, lw)| (counts.get(s).copied().unwrap_or(0) as f64 / steps as f64 - lw.exp()).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.01, "tv = {tv}");
}

#[test]
fn proposal_kind_frequencies_are_uniform_in_the_interior() {
    let mut r = rng(304);
    let s = Configuration::new(vec![1, 5], 20).unwrap();
    let total = 100_000;
    let mut counts: HashMap<ProposalKind, usize> = HashMap::new();
    for _ in 0..total {
        let prop = propose::<f64, _>(&s, 20, 5, &mut r);
        *counts.entry(prop.kind).or_default() += 1;
    }
    let sd = (total as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    for kind in [ProposalKind::Add, ProposalKind::Remove, ProposalKind::Swap] {
        let c = counts[&kind] as f64;
        assert!((c - total as f64 / 3.0).abs() < 3.0 * sd, "{kind:?}: {c}");
    }
}

#[test]
fn same_seed_same_chain() {
    let data = linear_instance(20, 8, &[(1, 2.0)], 1.0, 305);
    let hp = HyperParams64::defaults(4);
    let settings = McmcSettings {
        iters: 3_000,
        burnin: 500,
        thin: 2,
        seed: 99,
        draw_sigma2: true,
    };
    let a = run_chain(&data, &hp, &settings).unwrap();
    let b = run_chain(&data, &hp, &settings).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 1_250);
    assert_eq!(a.sigma2_draws.as_ref().unwrap().len(), a.len());
    assert!(a.sigma2_draws.as_ref().unwrap().iter().all(|&v| v > 0.0));
    assert_eq!(
        format!("{:?}", a.state_frequencies()),
        format!("{:?}", b.state_frequencies())
    );

    let without = run_chain(
        &data,
        &hp,
        &McmcSettings {
            draw_sigma2: false,
            ..settings
        },
    )
    .unwrap();
    assert_eq!(without.states, a.states);
    assert!(without.sigma2_draws.is_none());
}

#[test]
fn modal_state_matches_enumeration_argmax() {
    let data = linear_instance(15, 5, &[(3, 3.0)], 1.0, 306);
    let hp = HyperParams64::defaults(3);
    let exact = enumerate_posterior(&data, &hp).unwrap();
    let chain = run_chain(
        &data,
        &hp,
        &McmcSettings {
            iters: 20_000,
            burnin: 2_000,
            seed: 7,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(
        chain.modal_state().unwrap(),
        posterior_mode(&exact).unwrap().config
    );
    let rate = chain.acceptance_rate();
    assert!(rate > 0.0 && rate < 1.0, "{rate}");
}

#[test]
fn chain_rejects_invalid_settings() {
    let data = linear_instance(10, 4, &[], 1.0, 307);
    let hp = HyperParams64::defaults(2);
    let bad = McmcSettings {
        iters: 100,
        burnin: 200,
        ..Default::default()
    };
    assert!(run_chain(&data, &hp, &bad).is_err());
    assert!(run_chain(
        &data,
        &hp.clone().with_max_size(11),
        &McmcSettings::default()
    )
    .is_err());
}

#[test]
fn duplicated_columns_never_enter_together() {
    // column 3 duplicates column 1
    let base = linear_instance(12, 4, &[(1, 2.0)], 1.0, 308);
    let mut x = base.x().to_owned();
    let c1 = x.column(1).to_owned();
    x.column_mut(3).assign(&c1);
    let data = ebpred_core::Dataset64::new(x, base.y().to_owned()).unwrap();
    let hp = HyperParams64::defaults(3).with_sigma_mode(known());
    let chain = run_chain(
        &data,
        &hp,
        &McmcSettings {
            iters: 10_000,
            burnin: 0,
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(chain
        .states
        .iter()
        .all(|s| !(s.contains(1) && s.contains(3))));
}
