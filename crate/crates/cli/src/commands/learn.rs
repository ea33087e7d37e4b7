use acs_core::learning::{
    acs_pcd_train, ais_log_z, exact_log_likelihood, pcd_train, two_cluster_dataset, AisEstimate, LearnTrace,
};
use acs_core::targets::RbmModel;
use acs_core::{RngStream, State, Target};
use serde::Serialize;

use super::tune::phase_name;
use super::{opt_cell, write_json, Ctx, SeedStat};
use crate::config::{DataConfig, LearnConfig, LearnMethod};
use crate::error::{CliError, CliResult};
use crate::formats::{csv_writer, read_states, write_model, JSON_FORMAT_VERSION};

const STREAM_INIT: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_AIS: u64 = 2;

#[derive(Clone, Debug, Serialize)]
pub struct Evaluation {
    pub exact_log_likelihood_train: Option<f64>,
    pub exact_log_likelihood_test: Option<f64>,
    pub ais: Option<AisEvaluation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AisEvaluation {
    pub log_z: f64,
    pub log_weight_variance: f64,
    pub log_likelihood_train: f64,
    pub log_likelihood_test: Option<f64>,
}

#[derive(Serialize)]
struct SeedResult {
    seed: u64,
    model: String,
    checkpoints: Vec<String>,
    evaluation: Evaluation,
}

#[derive(Serialize)]
struct LearnSummary {
    format_version: u32,
    config_hash: String,
    seeds: Vec<u64>,
    n_visible: usize,
    n_hidden: usize,
    runs: Vec<SeedResult>,
    /// Cross-seed statistics of every numeric evaluation field.
    aggregate: std::collections::BTreeMap<String, SeedStat>,
}

fn load_data(ctx: &Ctx, d: &DataConfig) -> CliResult<(Vec<State>, Vec<State>)> {
    match d {
        DataConfig::TwoCluster {
            n_visible,
            n_train,
            n_test,
            flip_prob,
            data_seed,
        } => {
            if *n_visible == 0 || *n_train == 0 || !(0.0..=1.0).contains(flip_prob) {
                return Err(ctx
                    .loaded
                    .error_at("learn.data", "need n_visible, n_train > 0 and flip_prob in [0, 1]"));
            }
            let root = RngStream::new(*data_seed);
            Ok((
                two_cluster_dataset(*n_visible, *n_train, *flip_prob, &mut root.split(0)),
                two_cluster_dataset(*n_visible, *n_test, *flip_prob, &mut root.split(1)),
            ))
        }
        DataConfig::File { train, test } => {
            let base = &ctx.loaded.base_dir;
            let tr = read_states(&base.join(train))?;
            let te = match test {
                Some(p) => read_states(&base.join(p))?,
                None => Vec::new(),
            };
            Ok((tr, te))
        }
    }
}

fn init_model(n_visible: usize, n_hidden: usize, std: f64, rng: &mut RngStream) -> CliResult<RbmModel> {
    let w = (0..n_visible * n_hidden).map(|_| rng.normal(0.0, std)).collect();
    Ok(RbmModel::new(w, vec![0.0; n_hidden], vec![0.0; n_visible])?)
}

fn mean_log_prob(model: &RbmModel, data: &[State], log_z: f64) -> f64 {
    data.iter().map(|x| model.energy(x) - log_z).sum::<f64>() / data.len() as f64
}

fn evaluate(learn: &LearnConfig, model: &RbmModel, train: &[State], test: &[State], rng: &mut RngStream) -> CliResult<Evaluation> {
    let max = learn.evaluation.max_enumerated_units;
    let exact = model.n_visible().min(model.n_hidden()) <= max;
    let ll = |d: &[State]| -> CliResult<Option<f64>> {
        if exact && !d.is_empty() {
            Ok(Some(exact_log_likelihood(model, d, max)?))
        } else {
            Ok(None)
        }
    };
    let ais = match &learn.evaluation.ais {
        Some(a) => {
            let AisEstimate {
                log_z,
                log_weight_variance,
                ..
            } = ais_log_z(model, a.n_temps, a.steps_per_temp, a.n_particles, rng)?;
            Some(AisEvaluation {
                log_z,
                log_weight_variance,
                log_likelihood_train: mean_log_prob(model, train, log_z),
                log_likelihood_test: (!test.is_empty()).then(|| mean_log_prob(model, test, log_z)),
            })
        }
        None => None,
    };
    Ok(Evaluation {
        exact_log_likelihood_train: ll(train)?,
        exact_log_likelihood_test: ll(test)?,
        ais,
    })
}

fn write_trace(path: &std::path::Path, hash: &str, seed: u64, t: &LearnTrace) -> CliResult<()> {
    let mut w = csv_writer(path, hash, Some(seed))?;
    w.write_record(["iter", "data_energy", "buffer_energy", "grad_norm", "alpha_max", "alpha_min"])?;
    for i in 0..t.grad_norm.len() {
        w.write_record([
            (i + 1).to_string(),
            t.data_energy[i].to_string(),
            t.buffer_energy[i].to_string(),
            t.grad_norm[i].to_string(),
            opt_cell(t.alpha_max.get(i).copied()),
            opt_cell(t.alpha_min.get(i).copied()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(ctx: &Ctx) -> CliResult<()> {
    let l = &ctx.loaded;
    let learn = l.section(&ctx.cfg().learn, "learn")?;
    learn.pcd.validate().map_err(|e| l.error_at("learn.pcd", e))?;
    if learn.n_hidden == 0 {
        return Err(l.error_at("learn.n_hidden", "must be positive"));
    }
    if !(learn.init_weight_std >= 0.0) {
        return Err(l.error_at("learn.init_weight_std", "must be non-negative"));
    }
    let spec = match (learn.method, &learn.sampler) {
        (LearnMethod::Pcd, None) => return Err(l.error_at("learn.method", "pcd needs a [learn.sampler] table")),
        (LearnMethod::Pcd, Some(s)) if s.needs_tuning() => {
            return Err(l.error_at("learn.sampler", "acs_tuned is not available for learning; use method = \"acs_pcd\""))
        }
        (LearnMethod::Pcd, Some(s)) => Some(s.spec(None)?),
        (LearnMethod::AcsPcd, _) => None,
    };
    let (train, test) = load_data(ctx, &learn.data)?;
    if train.is_empty() {
        return Err(l.error_at("learn.data", "training set is empty"));
    }
    let n_visible = train[0].len();
    if train.iter().chain(&test).any(|x| x.len() != n_visible) {
        return Err(CliError::Config("training and test examples must share one length".into()));
    }

    let results = ctx.per_seed(|seed| {
        let root = RngStream::new(seed);
        let model = init_model(n_visible, learn.n_hidden, learn.init_weight_std, &mut root.split(STREAM_INIT))?;
        let mut rng = root.split(STREAM_TRAIN);
        let (model, trace) = match &spec {
            Some(s) => pcd_train(model, &train, s, &learn.pcd, &mut rng)?,
            None => acs_pcd_train(model, &train, &learn.pcd, &mut rng)?,
        };
        let eval = evaluate(learn, &model, &train, &test, &mut root.split(STREAM_AIS))?;
        Ok((model, trace, eval))
    })?;

    let models_dir = ctx.dir("models")?;
    let traces_dir = ctx.dir("traces")?;
    let mut runs = Vec::new();
    for (&seed, (model, trace, eval)) in ctx.seeds().iter().zip(results) {
        let name = format!("model_seed{seed}.acs1");
        write_model(&models_dir.join(&name), &model, &ctx.hash, seed)?;
        let mut checkpoints = Vec::new();
        if !trace.checkpoints.is_empty() {
            let cdir = ctx.dir("checkpoints")?;
            for (iter, m) in &trace.checkpoints {
                let c = format!("model_seed{seed}_iter{iter}.acs1");
                write_model(&cdir.join(&c), m, &ctx.hash, seed)?;
                checkpoints.push(format!("checkpoints/{c}"));
            }
        }
        write_trace(&traces_dir.join(format!("learn_trace_seed{seed}.csv")), &ctx.hash, seed, &trace)?;
        if !trace.tune_log.is_empty() {
            let mut w = csv_writer(&traces_dir.join(format!("tune_log_seed{seed}.csv")), &ctx.hash, Some(seed))?;
            w.write_record(["phase", "round", "alpha", "beta", "accept", "selected"])?;
            for r in &trace.tune_log {
                w.write_record([
                    phase_name(r.phase).to_string(),
                    r.round.to_string(),
                    r.alpha.to_string(),
                    r.beta.to_string(),
                    r.accept.to_string(),
                    (r.selected as u8).to_string(),
                ])?;
            }
            w.flush()?;
        }
        eprintln!(
            "seed {seed}: exact LL train {} test {}",
            opt_cell(eval.exact_log_likelihood_train),
            opt_cell(eval.exact_log_likelihood_test)
        );
        runs.push(SeedResult {
            seed,
            model: format!("models/{name}"),
            checkpoints,
            evaluation: eval,
        });
    }

    let mut aggregate = std::collections::BTreeMap::new();
    let fields: [(&str, fn(&Evaluation) -> Option<f64>); 6] = [
        ("exact_log_likelihood_train", |e| e.exact_log_likelihood_train),
        ("exact_log_likelihood_test", |e| e.exact_log_likelihood_test),
        ("ais_log_z", |e| e.ais.as_ref().map(|a| a.log_z)),
        ("ais_log_weight_variance", |e| e.ais.as_ref().map(|a| a.log_weight_variance)),
        ("ais_log_likelihood_train", |e| e.ais.as_ref().map(|a| a.log_likelihood_train)),
        ("ais_log_likelihood_test", |e| e.ais.as_ref().and_then(|a| a.log_likelihood_test)),
    ];
    for (name, get) in fields {
        let vals: Option<Vec<f64>> = runs.iter().map(|r| get(&r.evaluation)).collect();
        if let Some(v) = vals {
            aggregate.insert(name.to_string(), SeedStat::new(v));
        }
    }
    write_json(
        &ctx.dir("")?.join("summary.json"),
        &LearnSummary {
            format_version: JSON_FORMAT_VERSION,
            config_hash: ctx.hash.clone(),
            seeds: ctx.seeds().to_vec(),
            n_visible,
            n_hidden: learn.n_hidden,
            runs,
            aggregate,
        },
    )?;
    ctx.write_run_config("learn")
}
