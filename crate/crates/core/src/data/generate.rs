use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::truth::{ground_truth_exact, GroundTruth};
use crate::error::{Error, Result};
use crate::forge::{
    closed_form, parse_boolean, Connective, Family, FeatureKind, InteractingPair,
    InteractingParams, ModelFamily, ModelSpec, PertinentNegativeParams, UncertaintyParams,
    DEFAULT_INPUT_BOUND, MIN_ABS_WEIGHT,
};
use crate::linalg::Matrix;
use crate::seed::{self, Rng};

/// Largest Boolean formula accepted by the generator.
pub const MAX_BOOLEAN_ATOMS: usize = 20;
/// Boolean datasets enumerate every assignment up to this many rows.
pub const MAX_ENUMERATED_ROWS: usize = 4096;

/// Declarative description of a synthetic dataset and its paired model.
///
/// Weights are drawn from `seed`: `U(−1, 1)` rejected below 0.05 in
/// magnitude, interacting `(w1, w2)` redrawn until `|w1 − w2| ≥ 0.1`.
/// Continuous features are `N(0, σ²)` truncated to `[−B, B]` with
/// `σ = 1` (0.5 for shattered gradients), categorical features are
/// Bernoulli(0.5).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DatasetSpec {
    pub family: Family,
    /// Number of features (continuous features for the conflicting family,
    /// which adds as many cancellation features). Ignored for Boolean
    /// formulas, whose width is their atom count.
    pub n_features: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub seed: u64,
    pub input_bound: f64,
    /// Standard deviation of continuous features; family default when unset.
    pub continuous_std: Option<f64>,
    /// Pertinent-negative multiplier `m`.
    pub multiplier: f64,
    /// Number of pertinent-negative features (default: half, rounded up).
    pub n_pertinent: Option<usize>,
    /// Number of interacting pairs (default: `n_features / 2`).
    pub n_pairs: Option<usize>,
    /// Number of standard features, i.e. classes (default: `n_features / 2`).
    pub n_standard: Option<usize>,
    /// Weight of every common feature in the uncertainty model.
    pub common_weight: f64,
    pub formula: Option<String>,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            family: Family::Weighted,
            n_features: 10,
            n_train: 2600,
            n_val: 400,
            n_test: 1000,
            seed: 0,
            input_bound: DEFAULT_INPUT_BOUND,
            continuous_std: None,
            multiplier: 10.0,
            n_pertinent: None,
            n_pairs: None,
            n_standard: None,
            common_weight: 1.0,
            formula: None,
        }
    }
}

impl DatasetSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            ..Self::default()
        }
    }

    /// An n-ary AND or OR over atoms `x0 … x{n−1}`.
    pub fn boolean_unit(conn: Connective, n: usize) -> Self {
        let op = match conn {
            Connective::And => " AND ",
            Connective::Or => " OR ",
        };
        let atoms: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        Self {
            family: Family::Boolean,
            n_features: n,
            formula: Some(atoms.join(op)),
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sizes(mut self, train: usize, val: usize, test: usize) -> Self {
        self.n_train = train;
        self.n_val = val;
        self.n_test = test;
        self
    }

    fn continuous_std(&self) -> f64 {
        self.continuous_std.unwrap_or(match self.family {
            Family::Shattered => 0.5,
            _ => 1.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return bad("split sizes must be positive".into());
        }
        let n = self.n_features;
        if n == 0 && self.family != Family::Boolean {
            return bad("n_features must be positive".into());
        }
        let std = self.continuous_std();
        if !(std > 0.0 && std.is_finite()) {
            return bad(format!("continuous_std must be positive, got {std}"));
        }
        match self.family {
            Family::PertinentNegatives => {
                let p = self.n_pertinent.unwrap_or(n.div_ceil(2));
                if p == 0 || p > n {
                    return bad(format!("n_pertinent must be in 1..={n}"));
                }
            }
            Family::Interacting => {
                let p = self.n_pairs.unwrap_or(n / 2);
                if p == 0 || 2 * p > n {
                    return bad(format!("n_pairs must be in 1..={}", n / 2));
                }
            }
            Family::Uncertainty => {
                let s = self.n_standard.unwrap_or(n / 2);
                if s == 0 || s > n {
                    return bad(format!("n_standard must be in 1..={n}"));
                }
            }
            Family::Boolean => {
                let Some(f) = &self.formula else {
                    return bad("boolean datasets need a formula".into());
                };
                let ast = parse_boolean(f)?;
                if ast.variables.len() > MAX_BOOLEAN_ATOMS {
                    return bad(format!(
                        "formula has {} atoms, at most {MAX_BOOLEAN_ATOMS} supported",
                        ast.variables.len()
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Draws the paired model spec (weights) from the spec's seed.
    pub fn draw_model(&self) -> Result<ModelSpec> {
        self.validate()?;
        let mut rng = seed::rng(seed::derive_named(self.seed, "model"));
        let n = self.n_features;
        let draw = |rng: &mut Rng| -> f64 {
            loop {
                let w: f64 = rng.random_range(-1.0..1.0);
                if w.abs() >= MIN_ABS_WEIGHT {
                    return w;
                }
            }
        };
        let model = match self.family {
            Family::Weighted => ModelFamily::Weighted {
                weights: (0..n).map(|_| draw(&mut rng)).collect(),
            },
            Family::Conflicting => ModelFamily::Conflicting {
                weights: (0..n).map(|_| draw(&mut rng)).collect(),
            },
            Family::PertinentNegatives => ModelFamily::PertinentNegatives {
                weights: (0..n).map(|_| draw(&mut rng)).collect(),
                params: PertinentNegativeParams {
                    pn_indices: (0..self.n_pertinent.unwrap_or(n.div_ceil(2))).collect(),
                    multiplier: self.multiplier,
                },
            },
            Family::Shattered => ModelFamily::Shattered {
                weights: (0..n).map(|_| draw(&mut rng)).collect(),
                offsets: vec![0.0; n],
            },
            Family::Interacting => {
                let k = self.n_pairs.unwrap_or(n / 2);
                let pairs = (0..k)
                    .map(|i| {
                        let w1 = draw(&mut rng);
                        let w2 = loop {
                            let w2 = draw(&mut rng);
                            if (w1 - w2).abs() >= 0.1 {
                                break w2;
                            }
                        };
                        InteractingPair {
                            continuous: i,
                            categorical: k + i,
                            w1,
                            w2,
                            categorical_weight: draw(&mut rng),
                        }
                    })
                    .collect();
                ModelFamily::Interacting(InteractingParams {
                    n_features: n,
                    pairs,
                    non_interacting: (2 * k..n).map(|i| (i, draw(&mut rng))).collect(),
                })
            }
            Family::Uncertainty => {
                let s = self.n_standard.unwrap_or(n / 2);
                ModelFamily::Uncertainty(UncertaintyParams {
                    n_features: n,
                    standard: (0..s).map(|i| (i, draw(&mut rng))).collect(),
                    common: (s..n).map(|i| (i, self.common_weight)).collect(),
                })
            }
            Family::Boolean => ModelFamily::Boolean {
                formula: self.formula.clone().unwrap(),
            },
        };
        let spec = ModelSpec {
            input_bound: self.input_bound,
            model,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Realised samples with labels and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub features: Matrix,
    /// Closed-form model output per row (one column, or one probability per
    /// class for the uncertainty family).
    pub labels: Matrix,
    pub kinds: Vec<FeatureKind>,
    pub ground_truth: GroundTruth,
    pub model: ModelSpec,
}

impl DatasetBundle {
    /// Labels the rows with the closed form and attaches the family's
    /// ground truth.
    pub fn from_features(model: ModelSpec, features: Matrix) -> Result<Self> {
        let kinds = model.feature_kinds();
        crate::error::check_dim(kinds.len(), features.cols())?;
        let mut labels = Vec::with_capacity(features.rows() * model.n_outputs());
        for x in features.iter_rows() {
            labels.extend(closed_form(&model, x)?);
        }
        let labels = Matrix::from_vec(features.rows(), model.n_outputs(), labels)?;
        let ground_truth = ground_truth_for(&model, &features)?;
        Ok(Self {
            features,
            labels,
            kinds,
            ground_truth,
            model,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    /// Class index per row (arg-max of the label row).
    pub fn classes(&self) -> Vec<usize> {
        self.labels.iter_rows().map(crate::nn::argmax_of).collect()
    }
}

fn ground_truth_for(model: &ModelSpec, features: &Matrix) -> Result<GroundTruth> {
    match &model.model {
        ModelFamily::Uncertainty(p) => Ok(GroundTruth::Mask(
            p.mask().into_iter().map(|v| v == 1.0).collect(),
        )),
        ModelFamily::Shattered { .. } => Ok(GroundTruth::None),
        ModelFamily::Boolean { .. } if model.boolean_ast().unwrap()?.as_unit().is_none() => {
            Ok(GroundTruth::None)
        }
        _ => {
            let mut gt = Matrix::zeros(features.rows(), features.cols());
            for (r, x) in features.iter_rows().enumerate() {
                gt.row_mut(r).copy_from_slice(&ground_truth_exact(model, x)?);
            }
            Ok(GroundTruth::Exact(gt))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub spec: DatasetSpec,
    pub model: ModelSpec,
    pub train: DatasetBundle,
    pub val: DatasetBundle,
    pub test: DatasetBundle,
}

impl GeneratedDataset {
    pub fn split(&self, s: Split) -> &DatasetBundle {
        match s {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

fn truncated_normal(rng: &mut Rng, normal: &Normal<f64>, bound: f64) -> f64 {
    loop {
        let v = normal.sample(rng);
        if v.abs() <= bound {
            return v;
        }
    }
}

fn sample_features(model: &ModelSpec, std: f64, rows: usize, seed: u64) -> Matrix {
    let kinds = model.feature_kinds();
    let n = kinds.len();
    let enumerate = kinds.iter().all(|k| *k == FeatureKind::BooleanPm1)
        && n < 64
        && (1usize << n) <= MAX_ENUMERATED_ROWS;
    if enumerate {
        let rows = 1usize << n;
        let mut data = Vec::with_capacity(rows * n);
        for r in 0..rows {
            data.extend((0..n).map(|i| if r >> i & 1 == 1 { 1.0 } else { -1.0 }));
        }
        return Matrix::from_vec(rows, n, data).unwrap();
    }
    let mut rng = seed::rng(seed);
    let normal = Normal::new(0.0, std).unwrap();
    let mut data = Vec::with_capacity(rows * n);
    for _ in 0..rows {
        for k in &kinds {
            data.push(match k {
                FeatureKind::Continuous => truncated_normal(&mut rng, &normal, model.input_bound),
                FeatureKind::Categorical01 => f64::from(u8::from(rng.random::<bool>())),
                FeatureKind::BooleanPm1 => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            });
        }
    }
    Matrix::from_vec(rows, n, data).unwrap()
}

/// Generates train/validation/test splits and the paired model spec.
///
/// Boolean formulas with at most 12 atoms are enumerated exhaustively and
/// every split holds the full truth table.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<GeneratedDataset> {
    let model = spec.draw_model()?;
    let std = spec.continuous_std();
    let make = |split: Split, rows: usize| {
        let x = sample_features(&model, std, rows, seed::derive_named(spec.seed, split.name()));
        DatasetBundle::from_features(model.clone(), x)
    };
    let train = make(Split::Train, spec.n_train)?;
    let val = make(Split::Val, spec.n_val)?;
    let test = make(Split::Test, spec.n_test)?;
    Ok(GeneratedDataset {
        spec: spec.clone(),
        model,
        train,
        val,
        test,
    })
}
