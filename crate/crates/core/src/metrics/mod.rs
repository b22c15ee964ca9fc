//! Scores for attribution matrices: error against exact ground truth,
//! attribution on irrelevant features, robustness and faithfulness.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::attr::{AttributionMatrix, AttributionMethodConfig};
use crate::data::GroundTruth;
use crate::error::{check_dim, Error, Result};
use crate::forge::FeatureKind;
use crate::linalg::{mean_std, norm2, Matrix};
use crate::nn::{FeedForwardNet, Target};
use crate::seed;

pub const DEFAULT_SENSITIVITY_RADIUS: f64 = 0.02;
pub const DEFAULT_SENSITIVITY_PERTURBATIONS: usize = 10;
pub const DEFAULT_INFIDELITY_NOISE: f64 = 0.5;
pub const DEFAULT_INFIDELITY_PERTURBATIONS: usize = 128;

/// Floor on the attribution norm in the max-sensitivity denominator.
const SENSITIVITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "metric", rename_all = "snake_case", deny_unknown_fields))]
pub enum Metric {
    Mse,
    MaskError,
    SensitivityMax {
        #[cfg_attr(feature = "serde", serde(default = "default_radius"))]
        radius: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_sensitivity_n"))]
        n_perturb: usize,
    },
    Infidelity {
        #[cfg_attr(feature = "serde", serde(default = "default_noise"))]
        noise_scale: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_infidelity_n"))]
        n_perturb: usize,
    },
}

#[cfg(feature = "serde")]
fn default_radius() -> f64 {
    DEFAULT_SENSITIVITY_RADIUS
}
#[cfg(feature = "serde")]
fn default_sensitivity_n() -> usize {
    DEFAULT_SENSITIVITY_PERTURBATIONS
}
#[cfg(feature = "serde")]
fn default_noise() -> f64 {
    DEFAULT_INFIDELITY_NOISE
}
#[cfg(feature = "serde")]
fn default_infidelity_n() -> usize {
    DEFAULT_INFIDELITY_PERTURBATIONS
}

impl Metric {
    pub fn sensitivity_max() -> Self {
        Metric::SensitivityMax {
            radius: DEFAULT_SENSITIVITY_RADIUS,
            n_perturb: DEFAULT_SENSITIVITY_PERTURBATIONS,
        }
    }

    pub fn infidelity() -> Self {
        Metric::Infidelity {
            noise_scale: DEFAULT_INFIDELITY_NOISE,
            n_perturb: DEFAULT_INFIDELITY_PERTURBATIONS,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::MaskError => "mask_error",
            Metric::SensitivityMax { .. } => "sensitivity_max",
            Metric::Infidelity { .. } => "infidelity",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Metric::SensitivityMax { radius, n_perturb } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidConfig("sensitivity radius must be positive".into()));
                }
                if n_perturb == 0 {
                    return Err(Error::InvalidConfig("n_perturb must be at least 1".into()));
                }
            }
            Metric::Infidelity { noise_scale, n_perturb } => {
                if !(noise_scale > 0.0 && noise_scale.is_finite()) {
                    return Err(Error::InvalidConfig("noise_scale must be positive".into()));
                }
                if n_perturb == 0 {
                    return Err(Error::InvalidConfig("n_perturb must be at least 1".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// A metric with the seed for its random perturbations.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricConfig {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub metric: Metric,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

impl MetricConfig {
    pub fn new(metric: Metric) -> Self {
        Self { metric, seed: 0 }
    }
}

/// Per-sample scores with their mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricResult {
    pub scores: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Set when the metric is undefined for the inputs and a conventional
    /// value was reported instead (a mask without irrelevant features).
    pub degenerate: bool,
}

impl MetricResult {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&scores);
        Self {
            scores,
            mean,
            std,
            degenerate: false,
        }
    }
}

/// Per sample, the mean over features of `(φ_i − FA_i)²`.
pub fn mse(attr: &Matrix, gt: &GroundTruth) -> Result<MetricResult> {
    let GroundTruth::Exact(truth) = gt else {
        return Err(Error::Unsupported(alloc::format!(
            "mse needs exact ground truth, got {}",
            gt.kind()
        )));
    };
    check_dim(truth.rows(), attr.rows())?;
    check_dim(truth.cols(), attr.cols())?;
    let scores = attr
        .iter_rows()
        .zip(truth.iter_rows())
        .map(|(a, t)| {
            a.iter().zip(t).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / a.len().max(1) as f64
        })
        .collect();
    Ok(MetricResult::from_scores(scores))
}

/// Per sample, the mean of `φ_i²` over features whose mask entry is false.
/// A mask without such features scores 0 and is flagged as degenerate.
pub fn mask_error(attr: &Matrix, gt: &GroundTruth) -> Result<MetricResult> {
    let GroundTruth::Mask(mask) = gt else {
        return Err(Error::Unsupported(alloc::format!(
            "mask error needs a relevance mask, got {}",
            gt.kind()
        )));
    };
    check_dim(mask.len(), attr.cols())?;
    let common: Vec<usize> = (0..mask.len()).filter(|&i| !mask[i]).collect();
    if common.is_empty() {
        let mut r = MetricResult::from_scores(vec![0.0; attr.rows()]);
        r.degenerate = true;
        return Ok(r);
    }
    let scores = attr
        .iter_rows()
        .map(|a| common.iter().map(|&i| a[i] * a[i]).sum::<f64>() / common.len() as f64)
        .collect();
    Ok(MetricResult::from_scores(scores))
}

/// Per sample, `max_δ ‖Φ(x+δ) − Φ(x)‖₂ / max(‖Φ(x)‖₂, 1e-12)` over
/// `n_perturb` draws of `δ` uniform in the L∞ ball of the given radius.
///
/// The method is re-run at every perturbed point with the row's own seed,
/// so stochastic methods see common random numbers.
pub fn sensitivity_max(
    method: &AttributionMethodConfig,
    net: &FeedForwardNet,
    x: &Matrix,
    radius: f64,
    n_perturb: usize,
    seed: u64,
) -> Result<MetricResult> {
    Metric::SensitivityMax { radius, n_perturb }.validate()?;
    method.method.validate()?;
    check_dim(net.input_dim(), x.cols())?;
    let mut scores = Vec::with_capacity(x.rows());
    for (i, row) in x.iter_rows().enumerate() {
        scores.push(sensitivity_row(method, net, row, i, radius, n_perturb, seed::derive(seed, i as u64))?);
    }
    Ok(MetricResult::from_scores(scores))
}

/// Max-sensitivity of one row; `index` selects the method's row seed.
pub fn sensitivity_row(
    method: &AttributionMethodConfig,
    net: &FeedForwardNet,
    x: &[f64],
    index: usize,
    radius: f64,
    n_perturb: usize,
    seed: u64,
) -> Result<f64> {
    let base = method.attribute_one(net, x, index)?;
    let denom = norm2(&base).max(SENSITIVITY_EPS);
    let mut rng = seed::rng(seed);
    let mut worst: f64 = 0.0;
    let mut z = vec![0.0; x.len()];
    for _ in 0..n_perturb {
        for (zi, xi) in z.iter_mut().zip(x) {
            *zi = xi + rng.random_range(-radius..=radius);
        }
        let phi = method.attribute_one(net, &z, index)?;
        let diff: Vec<f64> = phi.iter().zip(&base).map(|(a, b)| a - b).collect();
        worst = worst.max(norm2(&diff) / denom);
    }
    Ok(worst)
}

/// Monte-Carlo estimate of `E[(Iᵀφ − (f(x) − f(x − I)))²]` for one row.
///
/// Continuous columns get `I ~ N(0, noise_scale²)`. Categorical columns in
/// a uniformly random subset are moved to the baseline (`I = x − b`), ±1
/// columns in such a subset are negated (`I = 2x`).
#[allow(clippy::too_many_arguments)]
pub fn infidelity_row(
    phi: &[f64],
    net: &FeedForwardNet,
    x: &[f64],
    baseline: &[f64],
    kinds: &[FeatureKind],
    noise_scale: f64,
    n_perturb: usize,
    seed: u64,
    target: Target,
) -> Result<f64> {
    Metric::Infidelity { noise_scale, n_perturb }.validate()?;
    let n = x.len();
    check_dim(net.input_dim(), n)?;
    check_dim(n, phi.len())?;
    check_dim(n, baseline.len())?;
    check_dim(n, kinds.len())?;
    let fx = net.target_value(x, target)?;
    let normal = Normal::new(0.0, noise_scale).map_err(|_| Error::InvalidConfig("bad noise scale".into()))?;
    let mut rng = seed::rng(seed);
    let mut pert = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0.0;
    for _ in 0..n_perturb {
        for i in 0..n {
            pert[i] = match kinds[i] {
                FeatureKind::Continuous => normal.sample(&mut rng),
                FeatureKind::Categorical01 => {
                    if rng.random::<bool>() {
                        x[i] - baseline[i]
                    } else {
                        0.0
                    }
                }
                FeatureKind::BooleanPm1 => {
                    if rng.random::<bool>() {
                        2.0 * x[i]
                    } else {
                        0.0
                    }
                }
            };
            z[i] = x[i] - pert[i];
        }
        let predicted: f64 = pert.iter().zip(phi).map(|(a, b)| a * b).sum();
        let actual = fx - net.target_value(&z, target)?;
        total += (predicted - actual) * (predicted - actual);
    }
    Ok(total / n_perturb as f64)
}

/// Infidelity of every row of an attribution matrix, with the target and
/// baseline taken from the matrix's configuration.
pub fn infidelity(
    attr: &AttributionMatrix,
    net: &FeedForwardNet,
    x: &Matrix,
    kinds: &[FeatureKind],
    noise_scale: f64,
    n_perturb: usize,
    seed: u64,
) -> Result<MetricResult> {
    check_dim(x.rows(), attr.rows())?;
    check_dim(x.cols(), attr.cols())?;
    let mut scores = Vec::with_capacity(x.rows());
    for (i, row) in x.iter_rows().enumerate() {
        let one = || -> Result<f64> {
            let target = attr.config.target.resolve(net, row)?;
            let b = attr.config.baseline.resolve(net, row)?;
            infidelity_row(
                attr.values.row(i),
                net,
                row,
                &b,
                kinds,
                noise_scale,
                n_perturb,
                seed::derive(seed, i as u64),
                target,
            )
        };
        scores.push(one().map_err(|e| e.at_sample(i))?);
    }
    Ok(MetricResult::from_scores(scores))
}

/// Scores an attribution matrix with any metric.
///
/// `gt` is consulted by the ground-truth metrics; `kinds` by infidelity.
pub fn evaluate(
    cfg: &MetricConfig,
    attr: &AttributionMatrix,
    net: &FeedForwardNet,
    x: &Matrix,
    gt: &GroundTruth,
    kinds: &[FeatureKind],
) -> Result<MetricResult> {
    cfg.metric.validate()?;
    match cfg.metric {
        Metric::Mse => mse(&attr.values, gt),
        Metric::MaskError => mask_error(&attr.values, gt),
        Metric::SensitivityMax { radius, n_perturb } => {
            sensitivity_max(&attr.config, net, x, radius, n_perturb, cfg.seed)
        }
        Metric::Infidelity { noise_scale, n_perturb } => {
            infidelity(attr, net, x, kinds, noise_scale, n_perturb, cfg.seed)
        }
    }
}
