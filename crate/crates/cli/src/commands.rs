use std::fs;
use std::path::{Path, PathBuf};

use ebpred_core::posterior::exact_inclusion_probs;
use ebpred_core::predictive::density_grid;
use ebpred_core::sampler::posterior_mean_beta;
use ebpred_core::simulate::{DEFAULT_SIGNALS, DENSITY_GRID_POINTS};
use ebpred_core::{
    enumerate_posterior, inclusion_probs, prediction_interval, run_bvm_experiment, run_chain,
    run_experiment, run_split_benchmark, sample_predictive, Dataset64, FitSpec64, HyperParams64,
    McmcSettings, QueryPoint, SigmaMode, SimSetting64,
};
use ndarray::{Array1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::cli::{
    BenchArgs, ChainArgs, Cmd, EnumerateArgs, FitArgs, ModelArgs, PredictArgs, SimulateArgs,
};
use crate::config::Manifest;
use crate::error::CliError;
use crate::io::{load_csv, parse_csv, write_file, CsvOut};

const TOY_X: &str = include_str!("../data/toy_x.csv");
const TOY_Y: &str = include_str!("../data/toy_y.csv");

pub fn execute(cmd: &Cmd, manifest: &Manifest) -> Result<(), CliError> {
    let out = &cmd.run_args().out_dir;
    fs::create_dir_all(out).map_err(|e| CliError::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    match cmd {
        Cmd::Fit(a) => fit(a, out)?,
        Cmd::Predict(a) => predict(a, out)?,
        Cmd::Simulate(a) => simulate(a, out)?,
        Cmd::Enumerate(a) => enumerate(a, out)?,
        Cmd::BenchSplits(a) => bench_splits(a, out)?,
    }
    write_file(&out.join("manifest.conf"), manifest.render().as_bytes())
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref()
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn load_dataset(x: &Path, y: &Path) -> Result<Dataset64, CliError> {
    let x = load_csv(x)?.values;
    let y = load_csv(y)?.into_vector(y)?;
    Ok(Dataset64::new(x, y)?)
}

fn sigma_mode(m: &ModelArgs) -> SigmaMode<f64> {
    match m.sigma2 {
        Some(sigma2) => SigmaMode::Known { sigma2 },
        None => SigmaMode::InverseGamma {
            a0: m.ig_a0,
            b0: m.ig_b0,
        },
    }
}

/// Hyperparameters with `max_size` left at 1 for the caller to settle.
fn base_hp(m: &ModelArgs) -> HyperParams64 {
    HyperParams64 {
        alpha: m.alpha,
        gamma: m.gamma,
        a: m.a,
        c: m.c,
        max_size: 1,
        sigma_mode: sigma_mode(m),
        force: m.force,
    }
}

fn hp_for(m: &ModelArgs, data: &Dataset64) -> Result<HyperParams64, CliError> {
    let r = m.max_size.unwrap_or_else(|| data.numerical_rank().max(1));
    let hp = base_hp(m).with_max_size(r);
    hp.validate(data.n(), data.p())?;
    Ok(hp)
}

fn mcmc(c: &ChainArgs, draw_sigma2: bool) -> McmcSettings {
    McmcSettings {
        iters: c.iters,
        burnin: c.burnin,
        thin: c.thin,
        seed: c.seed,
        draw_sigma2,
    }
}

fn sigma_json(mode: &SigmaMode<f64>) -> serde_json::Value {
    match *mode {
        SigmaMode::Known { sigma2 } => json!({ "known": { "sigma2": sigma2 } }),
        SigmaMode::InverseGamma { a0, b0 } => json!({ "inverse_gamma": { "a0": a0, "b0": b0 } }),
    }
}

fn save_json(path: &Path, v: &serde_json::Value) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    write_file(path, s.as_bytes())
}

fn fit(a: &FitArgs, out: &Path) -> Result<(), CliError> {
    let data = load_dataset(require(&a.data.x, "x")?, require(&a.data.y, "y")?)?;
    let hp = hp_for(&a.model, &data)?;
    let chain = run_chain(&data, &hp, &mcmc(&a.chain, false))?;

    let incl = inclusion_probs(&chain, data.p())?;
    let mut csv = CsvOut::with_header(&["index", "inclusion_probability"]);
    for (j, q) in incl.iter().enumerate() {
        csv.row(&[j.to_string(), q.to_string()]);
    }
    csv.save(&out.join("inclusion.csv"))?;

    let beta = posterior_mean_beta(&chain, &data)?;
    let freq = chain.state_frequencies();
    let top: Vec<_> = freq
        .iter()
        .take(a.top)
        .map(|(s, f)| json!({ "configuration": s.indices(), "frequency": f }))
        .collect();
    let summary = json!({
        "n": data.n(),
        "p": data.p(),
        "max_size": hp.max_size,
        "sigma_mode": sigma_json(&hp.sigma_mode),
        "iters": a.chain.iters,
        "burnin": a.chain.burnin,
        "thin": a.chain.thin,
        "seed": a.chain.seed,
        "kept_states": chain.len(),
        "acceptance_rate": chain.acceptance_rate(),
        "distinct_states": freq.len(),
        "modal_configuration": chain.modal_state().map(|s| s.indices().to_vec()),
        "top_states": top,
        "posterior_mean_beta": beta.to_vec(),
    });
    save_json(&out.join("chain_summary.json"), &summary)
}

fn predict(a: &PredictArgs, out: &Path) -> Result<(), CliError> {
    let level = a.predictive.level;
    if let Some(path) = &a.draws {
        let draws = load_csv(path)?.into_vector(path)?.to_vec();
        let (lo, hi) = prediction_interval(&draws, level)?;
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let v = json!([{
            "query": 0,
            "point_prediction": mean,
            "lower": lo,
            "upper": hi,
            "level": level,
            "draws": draws.len(),
        }]);
        return save_json(&out.join("intervals.json"), &v);
    }

    let data = load_dataset(require(&a.data.x, "x")?, require(&a.data.y, "y")?)?;
    let xnew_path = require(&a.xnew, "xnew")?;
    let xnew = load_csv(xnew_path)?.values;
    if xnew.ncols() != data.p() {
        return Err(CliError::Shape(format!(
            "{}: {} columns, but X has {}",
            xnew_path.display(),
            xnew.ncols(),
            data.p()
        )));
    }
    let hp = hp_for(&a.model, &data)?;
    let chain = run_chain(&data, &hp, &mcmc(&a.chain, false))?;

    let mut columns = Vec::with_capacity(xnew.nrows());
    let mut intervals = Vec::with_capacity(xnew.nrows());
    for (k, row) in xnew.axis_iter(Axis(0)).enumerate() {
        // streams 0 and 1 belong to the chain
        let mut rng = ChaCha8Rng::seed_from_u64(a.chain.seed);
        rng.set_stream(k as u64 + 2);
        let q = QueryPoint::new(row.to_owned(), data.p())?;
        let pd = sample_predictive(&chain, &data, &hp, &q, a.predictive.m, level, &mut rng)?;
        intervals.push(json!({
            "query": k,
            "point_prediction": pd.point_prediction,
            "lower": pd.interval.0,
            "upper": pd.interval.1,
            "level": level,
            "draws": pd.draws.len(),
        }));
        columns.push(pd.draws);
    }
    let header: Vec<String> = (0..columns.len()).map(|k| format!("q{k}")).collect();
    let mut csv = CsvOut::default();
    csv.row(&header);
    for i in 0..a.predictive.m {
        let row: Vec<f64> = columns.iter().map(|c| c[i]).collect();
        csv.row(&row);
    }
    csv.save(&out.join("draws.csv"))?;
    save_json(&out.join("intervals.json"), &json!(intervals))
}

fn sim_setting(a: &SimulateArgs) -> Result<SimSetting64, CliError> {
    let positions = match &a.signal_positions {
        None => DEFAULT_SIGNALS.to_vec(),
        Some(v) if a.one_based => v
            .iter()
            .map(|&j| {
                j.checked_sub(1)
                    .ok_or_else(|| CliError::Config("1-based signal positions start at 1".into()))
            })
            .collect::<Result<_, _>>()?,
        Some(v) => v.clone(),
    };
    let setting = SimSetting64 {
        n: a.n,
        p: a.p,
        signal: a.signal,
        rho: a.rho,
        signal_positions: positions,
        reps: a.reps,
        noise_sd: a.noise_sd,
        seed: a.chain.seed,
        test_batch: a.test_batch,
    };
    setting.validate()?;
    Ok(setting)
}

fn fit_spec(model: &ModelArgs, chain: &ChainArgs, m: usize, level: f64) -> FitSpec64 {
    let mut spec = FitSpec64::new(base_hp(model));
    spec.max_size_override = model.max_size;
    spec.mcmc = mcmc(chain, false);
    spec.m = m;
    spec.level = level;
    spec
}

fn simulate(a: &SimulateArgs, out: &Path) -> Result<(), CliError> {
    let setting = sim_setting(a)?;
    let spec = fit_spec(&a.model, &a.chain, a.predictive.m, a.predictive.level);

    if a.figure1 {
        let run = run_bvm_experiment(&setting, &spec)?;
        let mut dens = CsvOut::with_header(&["y", "oracle_density"]);
        for (y, d) in density_grid(&run.oracle, DENSITY_GRID_POINTS) {
            dens.row(&[y, d]);
        }
        dens.save(&out.join("figure1_density.csv"))?;
        let mut draws = CsvOut::with_header(&["draw"]);
        for d in &run.draws.draws {
            draws.row(&[d]);
        }
        draws.save(&out.join("figure1_draws.csv"))?;
        let v = json!({
            "ks": run.diagnostic.ks,
            "mean_abs_cdf_diff": run.diagnostic.mean_abs_diff,
            "oracle": {
                "location": run.oracle.location,
                "scale": run.oracle.scale,
                "df": run.oracle.df,
            },
            "point_prediction": run.draws.point_prediction,
            "interval": [run.draws.interval.0, run.draws.interval.1],
            "level": run.draws.level,
            "modal_configuration": run.modal_config.indices(),
        });
        return save_json(&out.join("figure1_bvm.json"), &v);
    }

    let report = run_experiment(&setting, &spec)?;
    let mut csv = CsvOut::with_header(&[
        "n",
        "p",
        "A",
        "r",
        "reps",
        "seed",
        "mspe",
        "coverage",
        "mean_length",
        "oracle_length",
        "oracle_coverage",
        "oracle_mspe",
    ]);
    csv.row(&[
        setting.n.to_string(),
        setting.p.to_string(),
        setting.signal.to_string(),
        setting.rho.to_string(),
        setting.reps.to_string(),
        setting.seed.to_string(),
        report.mspe.to_string(),
        report.coverage.to_string(),
        report.mean_length.to_string(),
        report.oracle_length.to_string(),
        report.oracle_coverage.to_string(),
        report.oracle_mspe.to_string(),
    ]);
    csv.save(&out.join("simulate.csv"))?;

    let mut reps = CsvOut::with_header(&[
        "replication",
        "chain_seed",
        "squared_error",
        "coverage",
        "length",
        "oracle_length",
        "oracle_coverage",
        "oracle_squared_error",
        "acceptance_rate",
        "modal_configuration",
    ]);
    for r in &report.records {
        reps.row(&[
            r.replication.to_string(),
            r.chain_seed.to_string(),
            r.squared_error.to_string(),
            r.coverage.to_string(),
            r.length.to_string(),
            r.oracle_length.to_string(),
            r.oracle_coverage.to_string(),
            r.oracle_squared_error.to_string(),
            r.acceptance_rate.to_string(),
            r.modal_config.to_string(),
        ]);
    }
    reps.save(&out.join("replications.csv"))?;

    // kept apart so the result files are reproducible byte for byte
    let mut timing = CsvOut::with_header(&["wall_clock_s"]);
    timing.row(&[report.wall_clock_secs]);
    timing.save(&out.join("timing.csv"))
}

fn enumerate(a: &EnumerateArgs, out: &Path) -> Result<(), CliError> {
    let data = match (&a.x, &a.y) {
        (Some(x), Some(y)) => load_dataset(x, y)?,
        (None, None) => {
            let x = parse_csv(TOY_X, "toy_x.csv")?.values;
            let y = parse_csv(TOY_Y, "toy_y.csv")?.into_vector(Path::new("toy_y.csv"))?;
            Dataset64::new(x, y)?
        }
        _ => return Err(CliError::Usage("give both --x and --y, or neither".into())),
    };
    let hp = hp_for(&a.model, &data)?;
    let mut masses = enumerate_posterior(&data, &hp)?;
    let incl = exact_inclusion_probs(&masses, data.p());
    masses.sort_by(|l, r| r.probability.total_cmp(&l.probability));

    let mut csv = CsvOut::with_header(&["configuration", "size", "log_weight", "probability"]);
    for m in &masses {
        csv.row(&[
            m.config.to_string(),
            m.config.len().to_string(),
            m.log_weight.value().to_string(),
            m.probability.to_string(),
        ]);
    }
    csv.save(&out.join("posterior.csv"))?;

    let mut inc = CsvOut::with_header(&["index", "inclusion_probability"]);
    for (j, q) in incl.iter().enumerate() {
        inc.row(&[j.to_string(), q.to_string()]);
    }
    inc.save(&out.join("inclusion.csv"))
}

fn bench_splits(a: &BenchArgs, out: &Path) -> Result<(), CliError> {
    let x_path = require(&a.x, "x")?;
    let table = load_csv(x_path)?.values;
    let data = match (a.y_col, &a.y) {
        (Some(col), None) => {
            if col >= table.ncols() {
                return Err(CliError::Shape(format!(
                    "--y-col {col} out of range for {} columns",
                    table.ncols()
                )));
            }
            let y: Array1<f64> = table.column(col).to_owned();
            let keep: Vec<usize> = (0..table.ncols()).filter(|&j| j != col).collect();
            Dataset64::new(table.select(Axis(1), &keep), y)?
        }
        (None, Some(y)) => Dataset64::new(table, load_csv(y)?.into_vector(y)?)?,
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --y and --y-col".into(),
            ))
        }
    };
    let spec = fit_spec(&a.model, &a.chain, a.predictive.m, a.predictive.level);
    let report = run_split_benchmark(&data, a.train_frac, a.splits, &spec, a.chain.seed)?;

    let mut csv = CsvOut::with_header(&["split", "n_train", "n_test", "mspe", "test_variance"]);
    for s in &report.splits {
        csv.row(&[
            s.split.to_string(),
            s.n_train.to_string(),
            s.n_test.to_string(),
            s.mspe.to_string(),
            s.test_variance.to_string(),
        ]);
    }
    csv.save(&out.join("splits.csv"))?;
    let mut summary = CsvOut::with_header(&["splits", "train_frac", "mean_mspe"]);
    summary.row(&[
        a.splits.to_string(),
        a.train_frac.to_string(),
        report.mean_mspe.to_string(),
    ]);
    summary.save(&out.join("bench_summary.csv"))
}
