//! Experiment configuration, read from TOML.
//!
//! Keys mirror the struct fields one to one and unknown keys are
//! rejected, so a misspelt option fails loudly instead of silently
//! falling back to a default.
//!
//! ```toml
//! seed = 7
//! n_trials = 5
//! arms = ["handcrafted", "trained"]
//!
//! [[datasets]]
//! family = "weighted"
//!
//! [[methods]]
//! method = "integrated_gradients"
//! steps = 512
//!
//! [[methods]]
//! label = "deeplift_norm"
//! method = "deeplift"
//! target = { kind = "logit_normalised", class = "predicted" }
//!
//! [metrics]
//! weighted = [{ metric = "mse" }, { metric = "infidelity" }]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use attribench_core::attr::{AttributionMethod, AttributionMethodConfig, Baseline};
use attribench_core::data::DatasetSpec;
use attribench_core::forge::{Family, ModelSpec};
use attribench_core::metrics::Metric;
use attribench_core::nn::{ClassSelector, TargetSpec, TrainConfig};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Which network a grid cell explains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Handcrafted,
    Trained,
}

impl Arm {
    pub const ALL: [Arm; 2] = [Arm::Handcrafted, Arm::Trained];

    pub fn name(&self) -> &'static str {
        match self {
            Arm::Handcrafted => "handcrafted",
            Arm::Trained => "trained",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetEntry {
    /// Row label in the result table; defaults to the family name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub spec: DatasetSpec,
}

impl DatasetEntry {
    pub fn new(spec: DatasetSpec) -> Self {
        Self { label: None, spec }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.spec.family.name().to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodEntry {
    /// Row label in the result table; defaults to the method name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Falls back to the family default (see [`default_baseline`]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<Baseline>,
    /// Falls back to the family default (see [`default_target`]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(flatten)]
    pub method: AttributionMethod,
}

impl MethodEntry {
    pub fn new(method: AttributionMethod) -> Self {
        Self {
            label: None,
            baseline: None,
            target: None,
            method,
        }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_owned());
        self
    }

    pub fn with_target(mut self, target: TargetSpec) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_baseline(mut self, baseline: Baseline) -> Self {
        self.baseline = Some(baseline);
        self
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method.name())
    }

    /// The full method configuration for a dataset family, seeded.
    pub fn resolve(&self, family: Family, seed: u64) -> AttributionMethodConfig {
        AttributionMethodConfig::new(self.method.clone())
            .with_baseline(self.baseline.clone().unwrap_or_else(|| default_baseline(family)))
            .with_target(self.target.unwrap_or_else(|| default_target(family)))
            .with_seed(seed)
    }
}

// serde's `flatten` silently drops keys the inner type does not know, which
// would defeat `deny_unknown_fields`. Entries are therefore read as a table,
// the wrapper keys are taken out and the remainder is deserialised strictly.
fn take<'de, T: Deserialize<'de>, E: de::Error>(table: &mut toml::Table, key: &str) -> std::result::Result<Option<T>, E> {
    table
        .remove(key)
        .map(|v| T::deserialize(v).map_err(|e| E::custom(format!("`{key}`: {e}"))))
        .transpose()
}

fn rest<'de, T: Deserialize<'de>, E: de::Error>(table: toml::Table) -> std::result::Result<T, E> {
    T::deserialize(toml::Value::Table(table)).map_err(E::custom)
}

impl<'de> Deserialize<'de> for DatasetEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut table = toml::Table::deserialize(d)?;
        Ok(Self {
            label: take(&mut table, "label")?,
            spec: rest(table)?,
        })
    }
}

impl<'de> Deserialize<'de> for MethodEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut table = toml::Table::deserialize(d)?;
        Ok(Self {
            label: take(&mut table, "label")?,
            baseline: take(&mut table, "baseline")?,
            target: take(&mut table, "target")?,
            method: rest(table)?,
        })
    }
}

/// Boolean networks live on `{−1, +1}ⁿ`, where zero is off-support; they
/// are explained against the flipped assignment instead.
pub fn default_baseline(family: Family) -> Baseline {
    match family {
        Family::Boolean => Baseline::BooleanFlip,
        _ => Baseline::Zero,
    }
}

pub fn default_target(family: Family) -> TargetSpec {
    match family {
        Family::Uncertainty => TargetSpec::ClassProbability(ClassSelector::Predicted),
        _ => TargetSpec::Scalar,
    }
}

/// The metric a family is scored with when no override is given.
/// `boolean_unit` marks Boolean models that are a bare AND/OR.
pub fn default_metric(family: Family, boolean_unit: bool) -> Metric {
    match family {
        Family::Uncertainty => Metric::MaskError,
        Family::Shattered => Metric::sensitivity_max(),
        Family::Boolean if !boolean_unit => Metric::infidelity(),
        _ => Metric::Mse,
    }
}

/// True for a Boolean model that is a single AND/OR over all its atoms,
/// the case with exact ground truth.
pub fn is_boolean_unit(model: &ModelSpec) -> bool {
    model.boolean_ast().and_then(|ast| ast.ok()).is_some_and(|ast| ast.as_unit().is_some())
}

pub fn default_metric_for_model(model: &ModelSpec) -> Metric {
    default_metric(model.family(), is_boolean_unit(model))
}

fn default_metric_for_spec(spec: &DatasetSpec) -> Metric {
    let unit = spec.family == Family::Boolean && spec.draw_model().is_ok_and(|m| is_boolean_unit(&m));
    default_metric(spec.family, unit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Result table as CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Result table as Markdown.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markdown: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetEntry>,
    #[serde(default = "default_arms")]
    pub arms: Vec<Arm>,
    pub methods: Vec<MethodEntry>,
    /// Metrics per dataset label, replacing the family default.
    #[serde(default)]
    pub metrics: BTreeMap<String, Vec<Metric>>,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Settings for the trained comparison models. The loss is chosen per
    /// family and the seed is folded into each trial's seed.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputPaths>,
}

fn default_arms() -> Vec<Arm> {
    vec![Arm::Handcrafted]
}

fn default_trials() -> usize {
    5
}

impl ExperimentConfig {
    pub fn new(datasets: Vec<DatasetEntry>, methods: Vec<MethodEntry>) -> Self {
        Self {
            datasets,
            arms: default_arms(),
            methods,
            metrics: BTreeMap::new(),
            n_trials: default_trials(),
            seed: 0,
            train: TrainConfig::default(),
            output: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml(&crate::io::read_input(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| BenchError::Config(e.to_string()))
    }

    /// Metrics a dataset is scored with.
    pub fn metrics_for(&self, entry: &DatasetEntry) -> Vec<Metric> {
        self.metrics
            .get(&entry.label())
            .cloned()
            .unwrap_or_else(|| vec![default_metric_for_spec(&entry.spec)])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.datasets.is_empty() {
            return bad("at least one dataset is required".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.arms.is_empty() {
            return bad("at least one model arm is required".into());
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        let mut seen = BTreeSet::new();
        for d in &self.datasets {
            d.spec.validate()?;
            if !seen.insert(d.label()) {
                return bad(format!("duplicate dataset label `{}`", d.label()));
            }
        }
        for (label, metrics) in &self.metrics {
            if !seen.contains(label) {
                return bad(format!("metrics given for unknown dataset `{label}`"));
            }
            if metrics.is_empty() {
                return bad(format!("empty metric list for `{label}`"));
            }
            for m in metrics {
                m.validate()?;
            }
        }
        let mut seen = BTreeSet::new();
        for m in &self.methods {
            m.method.validate()?;
            if !seen.insert(m.label()) {
                return bad(format!("duplicate method label `{}` (set `label`)", m.label()));
            }
        }
        let mut arms = BTreeSet::new();
        if !self.arms.iter().all(|a| arms.insert(*a)) {
            return bad("duplicate model arm".into());
        }
        Ok(())
    }
}
