//! The experiment pipeline: datasets and models per trial, then the
//! method × metric grid, aggregated over trials.
//!
//! Seeds follow a fixed tree so every grid cell is a pure function of the
//! configuration:
//!
//! ```text
//! trial   = derive(master, t)
//! dataset = derive(derive_named(trial, "dataset:<label>"), spec.seed)
//! train   = derive(derive_named(dataset, "train"), train.seed)
//! method  = derive_named(derive_named(dataset, "arm:<arm>"), "method:<label>")
//! metric  = derive_named(method, "metric:<name>")
//! row i   = derive(method, i)
//! ```
//!
//! Cells run on a rayon pool and are merged by position, so the output does
//! not depend on the number of threads.

use std::time::{Duration, Instant};

use attribench_core::attr::{AttributionMatrix, AttributionMethodConfig};
use attribench_core::data::{generate_dataset, train_on_bundles, DatasetBundle, GeneratedDataset};
use attribench_core::forge::{build_model, Family};
use attribench_core::linalg::mean_std;
use attribench_core::metrics::{evaluate, Metric, MetricConfig};
use attribench_core::nn::{argmax_of, ClassSelector, FeedForwardNet, Loss, TargetSpec, TrainReport};
use attribench_core::{seed, Matrix};
use rayon::prelude::*;

use crate::config::{Arm, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::table::{CellValue, ResultRow, ResultTable, MODEL_PERFORMANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses one per core.
    pub jobs: Option<usize>,
}

/// Table label of a target, e.g. `logit_normalised(predicted)`.
pub fn target_label(t: &TargetSpec) -> String {
    let sel = |s: &ClassSelector| match s {
        ClassSelector::Index(i) => i.to_string(),
        ClassSelector::Predicted => "predicted".to_owned(),
    };
    match t {
        TargetSpec::Scalar => "scalar".into(),
        TargetSpec::ClassProbability(s) => format!("class_probability({})", sel(s)),
        TargetSpec::Logit(s) => format!("logit({})", sel(s)),
        TargetSpec::LogitNormalised(s) => format!("logit_normalised({})", sel(s)),
    }
}

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    seed::derive(master, trial as u64)
}

pub fn dataset_seed(trial_seed: u64, label: &str, spec_seed: u64) -> u64 {
    seed::derive(seed::derive_named(trial_seed, &format!("dataset:{label}")), spec_seed)
}

pub fn method_seed(dataset_seed: u64, arm: Arm, label: &str) -> u64 {
    let arm_seed = seed::derive_named(dataset_seed, &format!("arm:{}", arm.name()));
    seed::derive_named(arm_seed, &format!("method:{label}"))
}

pub fn metric_seed(method_seed: u64, metric: &Metric) -> u64 {
    seed::derive_named(method_seed, &format!("metric:{}", metric.name()))
}

/// Attributes every row of `x` on the current rayon pool.
pub fn attribute_parallel(cfg: &AttributionMethodConfig, net: &FeedForwardNet, x: &Matrix) -> Result<AttributionMatrix> {
    cfg.method.validate()?;
    if net.input_dim() != x.cols() {
        return Err(attribench_core::Error::Dimension {
            expected: net.input_dim(),
            got: x.cols(),
        }
        .into());
    }
    let start = Instant::now();
    let rows = (0..x.rows())
        .into_par_iter()
        .map(|i| cfg.attribute_one(net, x.row(i), i))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let values = Matrix::from_vec(x.rows(), x.cols(), rows.concat())?;
    let mut attr = AttributionMatrix::new(values, cfg.clone());
    attr.elapsed = Some(start.elapsed());
    Ok(attr)
}

/// Mean squared error of a network against a bundle's labels, or its
/// accuracy when `classification` is set.
pub fn model_performance(net: &FeedForwardNet, bundle: &DatasetBundle, classification: bool) -> Result<f64> {
    let n = bundle.len().max(1) as f64;
    if classification {
        let classes = bundle.classes();
        let mut hits = 0usize;
        for (x, c) in bundle.features.iter_rows().zip(classes) {
            hits += usize::from(argmax_of(&net.forward(x)?) == c);
        }
        return Ok(hits as f64 / n);
    }
    let mut total = 0.0;
    for (x, y) in bundle.features.iter_rows().zip(bundle.labels.iter_rows()) {
        let out = net.forward(x)?;
        total += out.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64;
    }
    Ok(total / n)
}

fn performance_metric(family: Family) -> (&'static str, bool) {
    match family {
        Family::Uncertainty => ("accuracy", true),
        _ => ("mse", false),
    }
}

/// Data and networks of one (trial, dataset) pair.
pub struct PreparedTrial {
    /// Dataset seed; method and metric seeds derive from it.
    pub seed: u64,
    pub data: GeneratedDataset,
    /// Network per configured arm, in the order of `cfg.arms`, with the
    /// training report for trained arms.
    pub nets: Vec<std::result::Result<(FeedForwardNet, Option<TrainReport>), String>>,
}

/// Generates the data of dataset `d` in `trial` and builds or trains its
/// networks. Failures are returned as messages, destined for error cells.
pub fn prepare_trial(cfg: &ExperimentConfig, trial: usize, d: usize) -> std::result::Result<PreparedTrial, String> {
    let entry = &cfg.datasets[d];
    let seed = dataset_seed(trial_seed(cfg.seed, trial), &entry.label(), entry.spec.seed);
    let spec = entry.spec.clone().with_seed(seed);
    let data = generate_dataset(&spec).map_err(|e| e.to_string())?;
    let nets = cfg
        .arms
        .iter()
        .map(|arm| match arm {
            Arm::Handcrafted => build_model(&data.model).map(|n| (n, None)).map_err(|e| e.to_string()),
            Arm::Trained => {
                let mut tc = cfg.train.clone();
                tc.seed = seed::derive(seed::derive_named(seed, "train"), cfg.train.seed);
                tc.loss = match spec.family {
                    Family::Uncertainty => Loss::CrossEntropy,
                    _ => Loss::SquaredError,
                };
                train_on_bundles(&data.train, &data.val, &tc)
                    .map(|(net, report)| (net, Some(report)))
                    .map_err(|e| e.to_string())
            }
        })
        .collect();
    Ok(PreparedTrial { seed, data, nets })
}

/// Outcome of one (trial, dataset, arm, method) cell: one score per metric.
pub struct CellOutcome {
    pub scores: Vec<std::result::Result<f64, String>>,
    pub elapsed: Option<Duration>,
}

/// Attributes the test split with method `m` on arm `a` and scores it.
pub fn evaluate_cell(
    cfg: &ExperimentConfig,
    prep: &std::result::Result<PreparedTrial, String>,
    d: usize,
    a: usize,
    m: usize,
) -> CellOutcome {
    let entry = &cfg.datasets[d];
    let metrics = cfg.metrics_for(entry);
    let fail = |e: String| CellOutcome {
        scores: vec![Err(e); metrics.len()],
        elapsed: None,
    };
    let prep = match prep {
        Ok(p) => p,
        Err(e) => return fail(e.clone()),
    };
    let net = match &prep.nets[a] {
        Ok((n, _)) => n,
        Err(e) => return fail(e.clone()),
    };
    let method = &cfg.methods[m];
    let mseed = method_seed(prep.seed, cfg.arms[a], &method.label());
    let mcfg = method.resolve(entry.spec.family, mseed);
    let test = &prep.data.test;
    let attr = match attribute_parallel(&mcfg, net, &test.features) {
        Ok(a) => a,
        Err(e) => return fail(e.to_string()),
    };
    let scores = metrics
        .iter()
        .map(|metric| {
            let mc = MetricConfig {
                metric: *metric,
                seed: metric_seed(mseed, metric),
            };
            evaluate(&mc, &attr, net, &test.features, &test.ground_truth, &test.kinds)
                .map(|r| r.mean)
                .map_err(|e| e.to_string())
        })
        .collect();
    CellOutcome {
        scores,
        elapsed: attr.elapsed,
    }
}

fn aggregate(values: &[std::result::Result<f64, String>]) -> (CellValue, usize) {
    let ok: Vec<f64> = values.iter().filter_map(|v| v.as_ref().ok().copied()).collect();
    if let Some(Err(e)) = values.iter().find(|v| v.is_err()) {
        return (CellValue::Error(e.clone()), ok.len());
    }
    if ok.iter().any(|v| !v.is_finite()) {
        return (CellValue::Error("non-finite score".into()), ok.len());
    }
    let (mean, std) = mean_std(&ok);
    (CellValue::Value { mean, std }, ok.len())
}

/// Runs the full grid. Cell failures become error rows; only an invalid
/// configuration or a thread pool failure is returned as an error.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ResultTable> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        if j == 0 {
            return Err(BenchError::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| BenchError::Config(e.to_string()))?;
    pool.install(|| run_grid(cfg))
}

fn run_grid(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let (nt, nd, na, nm) = (cfg.n_trials, cfg.datasets.len(), cfg.arms.len(), cfg.methods.len());
    let prepared: Vec<_> = (0..nt * nd)
        .into_par_iter()
        .map(|k| prepare_trial(cfg, k / nd, k % nd))
        .collect();
    let at = |t: usize, d: usize| &prepared[t * nd + d];

    let cells: Vec<CellOutcome> = (0..nt * nd * na * nm)
        .into_par_iter()
        .map(|k| {
            let (t, rest) = (k / (nd * na * nm), k % (nd * na * nm));
            let (d, a, m) = (rest / (na * nm), (rest / nm) % na, rest % nm);
            evaluate_cell(cfg, at(t, d), d, a, m)
        })
        .collect();
    let cell = |t: usize, d: usize, a: usize, m: usize| &cells[((t * nd + d) * na + a) * nm + m];

    let mut rows = Vec::new();
    for (d, entry) in cfg.datasets.iter().enumerate() {
        let label = entry.label();
        let family = entry.spec.family;
        let metrics = cfg.metrics_for(entry);
        for (a, arm) in cfg.arms.iter().enumerate() {
            let (perf_name, classification) = performance_metric(family);
            let perf: Vec<_> = (0..nt)
                .map(|t| match at(t, d) {
                    Err(e) => Err(e.clone()),
                    Ok(p) => match &p.nets[a] {
                        Err(e) => Err(e.clone()),
                        Ok((net, _)) => model_performance(net, &p.data.test, classification).map_err(|e| e.to_string()),
                    },
                })
                .collect();
            let (value, n_trials) = aggregate(&perf);
            rows.push(ResultRow {
                dataset: label.clone(),
                arm: *arm,
                method: MODEL_PERFORMANCE.into(),
                target: "-".into(),
                metric: perf_name.into(),
                value,
                n_trials,
                runtime: None,
            });
            for (m, method) in cfg.methods.iter().enumerate() {
                let target = target_label(&method.resolve(family, 0).target);
                let times: Vec<f64> = (0..nt)
                    .filter_map(|t| cell(t, d, a, m).elapsed.map(|e| e.as_secs_f64()))
                    .collect();
                let runtime = (!times.is_empty()).then(|| mean_std(&times).0);
                for (k, metric) in metrics.iter().enumerate() {
                    let per_trial: Vec<_> = (0..nt).map(|t| cell(t, d, a, m).scores[k].clone()).collect();
                    let (value, n_trials) = aggregate(&per_trial);
                    rows.push(ResultRow {
                        dataset: label.clone(),
                        arm: *arm,
                        method: method.label(),
                        target: target.clone(),
                        metric: metric.name().into(),
                        value,
                        n_trials,
                        runtime,
                    });
                }
            }
        }
    }
    Ok(ResultTable { rows })
}
