use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use encact::activations::ActivationKind;
use encact::cheb::{degree_sweep, Domain, SweepRow};
use encact::he_core::{Engine, SchemeParams};
use encact::netgraph::{
    argmax, builtin, plaintext_reference, plan_bootstraps, run_inference, BootstrapPlan,
    CostReport, NetworkSpec, ParamsProfile, WeightStore,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::csv_io::load_weights_csv;
use crate::error::BenchError;
use crate::fixtures::{calibrate_betas, fixture_weights, gen_fixtures, Manifest};
use crate::inputs::{load_images, load_labels, random_images, Dataset};
use crate::report::{
    accuracy, BenchReport, CompareRow, PlanSummary, SampleRecord, REPORT_SCHEMA_VERSION,
};

const DEFAULT_ACTIVATION: &str = "relu_switch";
// keeps the random-image stream apart from the fixture-weight stream
const INPUT_SEED_SALT: u64 = 0x1a9e_5eed;

/// Network, parameters and weights resolved from a configuration.
pub struct Setup {
    pub net: NetworkSpec,
    pub params: SchemeParams,
    pub weights: WeightStore,
    pub weights_source: String,
}

fn activation_kind(tag: &str, cfg: &RunConfig) -> Result<ActivationKind, BenchError> {
    let degree = if tag == "relu_approx" {
        cfg.degree
    } else {
        None
    };
    ActivationKind::from_parts(tag, None, degree).map_err(|e| BenchError::Usage(e.to_string()))
}

/// The network with `tag` at every activated site (or its own activations
/// when `tag` is None and the network comes from JSON). The second value is
/// true when relu_approx sites still need a beta.
pub fn resolve_network(
    cfg: &RunConfig,
    tag: Option<&str>,
) -> Result<(NetworkSpec, bool), BenchError> {
    let name = cfg.network_name();
    let builtin_tag = tag.unwrap_or(DEFAULT_ACTIVATION);
    if let Some(net) = builtin(name, activation_kind(builtin_tag, cfg)?)? {
        return Ok((net, true));
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(BenchError::Usage(format!(
            "unknown network {name:?}: not a builtin (lenet5, resnet20) or an existing file"
        )));
    }
    let mut net = NetworkSpec::from_json_file(path)?;
    if let Some(tag) = tag {
        let kind = activation_kind(tag, cfg)?;
        for l in &mut net.layers {
            if !l.activation.is_identity() {
                l.activation = kind.clone();
            }
        }
        return Ok((net, true));
    }
    if let Some(d) = cfg.degree {
        for l in &mut net.layers {
            if let ActivationKind::ReluApprox(c) = &l.activation {
                l.activation = ActivationKind::ReluApprox(c.with_degree(d)?);
            }
        }
    }
    Ok((net, false))
}

pub fn resolve_params(cfg: &RunConfig, net: &NetworkSpec) -> Result<SchemeParams, BenchError> {
    let mut params = match cfg.params.as_deref() {
        None => net.params(),
        Some("lenet") => ParamsProfile::Lenet.params(),
        Some("resnet") => ParamsProfile::Resnet.params(),
        Some(path) => {
            let path = Path::new(path);
            if !path.exists() {
                return Err(BenchError::Usage(format!(
                    "unknown params {:?}: not a profile (lenet, resnet) or an existing file",
                    path.display()
                )));
            }
            SchemeParams::from_json_file(path)?
        }
    };
    if let Some(s) = cfg.sigma {
        params.noise_sigma = s;
    }
    params.validate()?;
    Ok(params)
}

/// Fills in relu_approx betas: `--beta` everywhere, else the per-layer values.
fn apply_betas(
    net: &mut NetworkSpec,
    cfg: &RunConfig,
    betas: &BTreeMap<String, f64>,
    required: bool,
) -> Result<(), BenchError> {
    for l in &mut net.layers {
        let ActivationKind::ReluApprox(c) = &l.activation else {
            continue;
        };
        let beta = match (cfg.beta, betas.get(&l.name).copied()) {
            (Some(b), _) | (None, Some(b)) => b,
            (None, None) if !required => continue,
            (None, None) => {
                return Err(BenchError::Usage(format!(
                    "no beta for layer {}: pass --beta or use weights with calibrated betas",
                    l.name
                )))
            }
        };
        l.activation = ActivationKind::ReluApprox(c.with_beta(beta)?);
    }
    Ok(())
}

pub fn setup(cfg: &RunConfig, tag: Option<&str>) -> Result<Setup, BenchError> {
    let (mut net, needs_beta) = resolve_network(cfg, tag)?;
    let params = resolve_params(cfg, &net)?;
    let (weights, betas, weights_source) = match &cfg.weights {
        Some(dir) => {
            let weights = load_weights_csv(dir, &net)?;
            let betas = Manifest::read_if_present(dir)?
                .map(|m| m.betas)
                .unwrap_or_default();
            (weights, betas, dir.display().to_string())
        }
        None => {
            let weights = fixture_weights(cfg.seed(), &net)?;
            let has_approx = net.layers.iter().any(|l| l.activation.config().is_some());
            let betas = if needs_beta && has_approx && cfg.beta.is_none() {
                calibrate_betas(cfg.seed(), &net, &weights)?
            } else {
                BTreeMap::new()
            };
            (weights, betas, format!("fixtures(seed={})", cfg.seed()))
        }
    };
    apply_betas(&mut net, cfg, &betas, needs_beta)?;
    net.validate()?;
    Ok(Setup {
        net,
        params,
        weights,
        weights_source,
    })
}

/// Images (and labels, if any) for a run. A label file is matched to the
/// source by position before samples are selected.
pub fn load_dataset(cfg: &RunConfig, net: &NetworkSpec) -> Result<Dataset, BenchError> {
    let numel: usize = net.input_shape.iter().product();
    let n = cfg.samples()?;
    let mut ds = match &cfg.inputs {
        None => random_images(cfg.seed() ^ INPUT_SEED_SALT, numel, n),
        Some(path) => load_images(path, numel)?,
    };
    if let Some(path) = &cfg.labels {
        let labels = load_labels(path)?;
        if labels.len() < ds.len() {
            return Err(BenchError::Data(format!(
                "{}: {} labels for {} images",
                path.display(),
                labels.len(),
                ds.len()
            )));
        }
        ds.labels = Some(labels[..ds.len()].to_vec());
    }
    ds.select(n, cfg.sample_mode.unwrap_or_default(), cfg.seed())
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, BenchError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::Usage(format!("--jobs: {e}")))
}

/// Encrypted inference over every image, one engine per image. Results are
/// in input order whatever the number of workers.
pub fn run_encrypted(
    s: &Setup,
    plan: &BootstrapPlan,
    images: &[Vec<f64>],
    seed: u64,
    jobs: usize,
) -> Result<Vec<(Vec<f64>, CostReport)>, BenchError> {
    thread_pool(jobs)?.install(|| {
        images
            .par_iter()
            .enumerate()
            .map(|(i, image)| {
                let engine = Engine::with_seed(s.params.clone(), seed.wrapping_add(i as u64))?;
                Ok(run_inference(&engine, &s.net, &s.weights, image, plan)?)
            })
            .collect()
    })
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<(), BenchError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| BenchError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_infer(cfg: &RunConfig) -> Result<BenchReport, BenchError> {
    let s = setup(cfg, cfg.activation.as_deref())?;
    let plan = plan_bootstraps(&s.net, &s.params)?;
    let ds = load_dataset(cfg, &s.net)?;
    let results = run_encrypted(&s, &plan, &ds.images, cfg.seed(), cfg.jobs())?;

    let mut op_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut records = Vec::with_capacity(results.len());
    for (i, (logits, report)) in results.iter().enumerate() {
        for (op, n) in report.ledger.counters() {
            *op_counts.entry(op.to_string()).or_insert(0) += n;
        }
        records.push(SampleRecord {
            index: i,
            predicted: argmax(logits),
            label: ds.labels.as_ref().map(|l| l[i]),
            cost_units: report.ledger.cost_units(),
            bootstraps: report.bootstrap_count,
        });
    }
    let predicted: Vec<usize> = records.iter().map(|r| r.predicted).collect();
    let total: f64 = records.iter().map(|r| r.cost_units).sum();
    let tag = distinct_tags(&s.net);
    Ok(BenchReport {
        schema_version: REPORT_SCHEMA_VERSION,
        timestamp: crate::report::unix_now(),
        config: cfg.clone(),
        network: s.net.name.clone(),
        activation: tag,
        weights_source: s.weights_source,
        plan: PlanSummary::from(&plan),
        accuracy: accuracy(&predicted, ds.labels.as_deref()),
        mean_cost_units: total / records.len() as f64,
        total_cost_units: total,
        records,
        op_counts,
    })
}

fn distinct_tags(net: &NetworkSpec) -> String {
    let mut tags: Vec<&str> = net
        .layers
        .iter()
        .filter(|l| !l.activation.is_identity())
        .map(|l| l.activation.tag())
        .collect();
    tags.dedup();
    if tags.is_empty() {
        "identity".into()
    } else {
        tags.join("+")
    }
}

pub fn compare_variants(cfg: &RunConfig) -> Vec<String> {
    let default = match cfg.network_name() {
        "resnet20" | "resnet" => "relu_approx,relu_switch",
        _ => "square,relu_approx,relu_switch",
    };
    cfg.activation
        .as_deref()
        .unwrap_or(default)
        .split(',')
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<Vec<CompareRow>, BenchError> {
    let mut rows = Vec::new();
    for variant in compare_variants(cfg) {
        let s = setup(cfg, Some(&variant))?;
        let plan = plan_bootstraps(&s.net, &s.params)?;
        let ds = load_dataset(cfg, &s.net)?;
        let results = run_encrypted(&s, &plan, &ds.images, cfg.seed(), cfg.jobs())?;
        let oracles: Vec<(usize, usize)> = thread_pool(cfg.jobs())?.install(|| {
            ds.images
                .par_iter()
                .map(|img| {
                    let exact = plaintext_reference(&s.net, &s.weights, img, true)?;
                    let series = plaintext_reference(&s.net, &s.weights, img, false)?;
                    Ok((argmax(&exact), argmax(&series)))
                })
                .collect::<Result<_, BenchError>>()
        })?;
        let encrypted: Vec<usize> = results.iter().map(|(l, _)| argmax(l)).collect();
        let exact: Vec<usize> = oracles.iter().map(|o| o.0).collect();
        let series: Vec<usize> = oracles.iter().map(|o| o.1).collect();
        let labels = ds.labels.as_deref();
        let n = results.len() as f64;
        rows.push(CompareRow {
            variant,
            plaintext_acc: accuracy(&exact, labels),
            encrypted_acc: accuracy(&encrypted, labels),
            cost_units: results
                .iter()
                .map(|(_, r)| r.ledger.cost_units())
                .sum::<f64>()
                / n,
            bootstraps: plan.bootstrap_count,
            series_acc: accuracy(&series, labels),
            agreement: encrypted.iter().zip(&exact).filter(|(a, b)| a == b).count() as f64 / n,
        });
    }
    Ok(rows)
}

pub fn cmd_plan(cfg: &RunConfig) -> Result<BootstrapPlan, BenchError> {
    let (mut net, needs_beta) = resolve_network(cfg, cfg.activation.as_deref())?;
    // depth does not depend on the beta value, only on whether it exceeds 1
    if needs_beta && cfg.beta.is_none() {
        let placeholder = RunConfig {
            beta: Some(2.0),
            ..cfg.clone()
        };
        apply_betas(&mut net, &placeholder, &BTreeMap::new(), true)?;
    } else {
        apply_betas(&mut net, cfg, &BTreeMap::new(), false)?;
    }
    let params = resolve_params(cfg, &net)?;
    Ok(plan_bootstraps(&net, &params)?)
}

pub fn cmd_approx_analyze(cfg: &RunConfig) -> Result<Vec<SweepRow>, BenchError> {
    let relu = |x: f64| x.max(0.0);
    degree_sweep(relu, &cfg.degrees()?, Domain::unit(), cfg.grid())
        .map_err(|e| BenchError::Usage(e.to_string()))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("degree,max_error,depth_cost\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.degree, r.max_error, r.depth_cost));
    }
    out
}

pub fn cmd_gen_fixtures(cfg: &RunConfig) -> Result<Manifest, BenchError> {
    let out = cfg
        .out
        .as_deref()
        .ok_or_else(|| BenchError::Usage("gen-fixtures needs --out DIR".into()))?;
    let (net, _) = resolve_network(cfg, None)?;
    fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;
    gen_fixtures(cfg.seed(), &net, out)
}
