//! Feature-attribution methods over [`FeedForwardNet`]s.
//!
//! Every method explains one scalar [`Target`] per row relative to a
//! [`Baseline`]. Sampling methods draw from a per-row seed derived from the
//! configured seed and the row index, so rows can be attributed in any
//! order or concurrently with identical results.

mod deeplift;
mod gradient;
mod lime;
mod shapley;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::nn::{FeedForwardNet, Target, TargetSpec};
use crate::seed;

pub use deeplift::deeplift_rescale_row;
pub use gradient::{input_x_gradient_row, integrated_gradients_row, IgQuadrature};
pub use lime::{lime_row, LimeOptions, Regularisation, LIME_ENUMERATION_LIMIT};
pub use shapley::{
    exact_shapley, feature_ablation_row, kernel_shap_row, shapley_value_sampling_row,
    EXACT_SHAPLEY_LIMIT, EXHAUSTIVE_PERMUTATION_LIMIT, KERNEL_SHAP_ENUMERATION_LIMIT,
};

/// Reference input the attributions are measured against.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", content = "values", rename_all = "snake_case"))]
pub enum Baseline {
    #[default]
    Zero,
    Fixed(Vec<f64>),
    /// For ±1 Boolean networks: all atoms false where the network outputs
    /// true, all atoms true otherwise.
    BooleanFlip,
}

impl Baseline {
    /// The baseline point for one explained input.
    pub fn resolve(&self, net: &FeedForwardNet, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(net.input_dim(), x.len())?;
        match self {
            Baseline::Zero => Ok(vec![0.0; x.len()]),
            Baseline::Fixed(b) => {
                check_dim(x.len(), b.len())?;
                Ok(b.clone())
            }
            Baseline::BooleanFlip => {
                let out = net.forward(x)?;
                Ok(crate::data::boolean_reference(out[0], x.len()))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Zero => "zero",
            Baseline::Fixed(_) => "fixed",
            Baseline::BooleanFlip => "boolean_flip",
        }
    }
}

/// An attribution method and its knobs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "method", rename_all = "snake_case", deny_unknown_fields))]
pub enum AttributionMethod {
    InputXGradient,
    IntegratedGradients {
        #[cfg_attr(feature = "serde", serde(default = "default_ig_steps"))]
        steps: usize,
        #[cfg_attr(feature = "serde", serde(default))]
        quadrature: IgQuadrature,
    },
    #[cfg_attr(feature = "serde", serde(rename = "deeplift"))]
    DeepLift,
    FeatureAblation,
    ShapleyValueSampling {
        #[cfg_attr(feature = "serde", serde(default = "default_permutations"))]
        n_permutations: usize,
        /// Average over all n! orderings instead of sampling.
        #[cfg_attr(feature = "serde", serde(default))]
        exhaustive: bool,
    },
    ExactShapley,
    KernelShap {
        #[cfg_attr(feature = "serde", serde(default = "default_kernel_budget"))]
        budget: usize,
    },
    Lime {
        #[cfg_attr(feature = "serde", serde(default = "default_lime_samples"))]
        n_samples: usize,
        /// Similarity kernel width; `0.75·√n` when unset.
        #[cfg_attr(feature = "serde", serde(default))]
        kernel_width: Option<f64>,
        #[cfg_attr(feature = "serde", serde(default))]
        regularisation: Regularisation,
        /// Use all 2ⁿ masks instead of `n_samples` random ones.
        #[cfg_attr(feature = "serde", serde(default))]
        exhaustive: bool,
    },
}

pub const DEFAULT_IG_STEPS: usize = 64;
pub const DEFAULT_PERMUTATIONS: usize = 25;
pub const DEFAULT_KERNEL_BUDGET: usize = 1024;
pub const DEFAULT_LIME_SAMPLES: usize = 200;
pub const DEFAULT_LASSO_LAMBDA: f64 = 0.01;

#[cfg(feature = "serde")]
fn default_ig_steps() -> usize {
    DEFAULT_IG_STEPS
}
#[cfg(feature = "serde")]
fn default_permutations() -> usize {
    DEFAULT_PERMUTATIONS
}
#[cfg(feature = "serde")]
fn default_kernel_budget() -> usize {
    DEFAULT_KERNEL_BUDGET
}
#[cfg(feature = "serde")]
fn default_lime_samples() -> usize {
    DEFAULT_LIME_SAMPLES
}

impl AttributionMethod {
    pub fn integrated_gradients() -> Self {
        AttributionMethod::IntegratedGradients {
            steps: DEFAULT_IG_STEPS,
            quadrature: IgQuadrature::default(),
        }
    }

    pub fn shapley_value_sampling() -> Self {
        AttributionMethod::ShapleyValueSampling {
            n_permutations: DEFAULT_PERMUTATIONS,
            exhaustive: false,
        }
    }

    pub fn kernel_shap() -> Self {
        AttributionMethod::KernelShap {
            budget: DEFAULT_KERNEL_BUDGET,
        }
    }

    pub fn lime() -> Self {
        AttributionMethod::Lime {
            n_samples: DEFAULT_LIME_SAMPLES,
            kernel_width: None,
            regularisation: Regularisation::None,
            exhaustive: false,
        }
    }

    pub fn lime_lasso() -> Self {
        AttributionMethod::Lime {
            n_samples: DEFAULT_LIME_SAMPLES,
            kernel_width: None,
            regularisation: Regularisation::Lasso {
                lambda: DEFAULT_LASSO_LAMBDA,
            },
            exhaustive: false,
        }
    }

    /// Stable identifier used in tables and file metadata.
    pub fn name(&self) -> String {
        match self {
            AttributionMethod::InputXGradient => "input_x_gradient".into(),
            AttributionMethod::IntegratedGradients { .. } => "integrated_gradients".into(),
            AttributionMethod::DeepLift => "deeplift".into(),
            AttributionMethod::FeatureAblation => "feature_ablation".into(),
            AttributionMethod::ShapleyValueSampling { .. } => "shapley_value_sampling".into(),
            AttributionMethod::ExactShapley => "exact_shapley".into(),
            AttributionMethod::KernelShap { .. } => "kernel_shap".into(),
            AttributionMethod::Lime { regularisation, .. } => match regularisation {
                Regularisation::None => "lime".into(),
                Regularisation::Lasso { .. } => "lime_lasso".into(),
            },
        }
    }

    /// True when the method draws random numbers.
    pub fn is_stochastic(&self) -> bool {
        match self {
            AttributionMethod::ShapleyValueSampling { exhaustive, .. } => !exhaustive,
            AttributionMethod::Lime { exhaustive, .. } => !exhaustive,
            AttributionMethod::KernelShap { .. } => true,
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        match *self {
            AttributionMethod::IntegratedGradients { steps: 0, .. } => bad("IG steps must be at least 1"),
            AttributionMethod::ShapleyValueSampling {
                n_permutations: 0,
                exhaustive: false,
            } => bad("n_permutations must be at least 1"),
            AttributionMethod::KernelShap { budget: 0 } => bad("KernelSHAP budget must be at least 1"),
            AttributionMethod::Lime {
                n_samples,
                kernel_width,
                regularisation,
                ..
            } => {
                if n_samples == 0 {
                    return bad("LIME n_samples must be at least 1");
                }
                if let Some(w) = kernel_width {
                    if !(w > 0.0 && w.is_finite()) {
                        return bad("LIME kernel width must be positive");
                    }
                }
                if let Regularisation::Lasso { lambda } = regularisation {
                    if !(lambda >= 0.0 && lambda.is_finite()) {
                        return bad("lasso penalty must be nonnegative");
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Attributes a single row against an already resolved baseline.
    pub fn attribute_row(
        &self,
        net: &FeedForwardNet,
        x: &[f64],
        baseline: &[f64],
        target: Target,
        seed: u64,
    ) -> Result<Vec<f64>> {
        check_dim(net.input_dim(), x.len())?;
        check_dim(x.len(), baseline.len())?;
        match *self {
            AttributionMethod::InputXGradient => input_x_gradient_row(net, x, target),
            AttributionMethod::IntegratedGradients { steps, quadrature } => {
                integrated_gradients_row(net, x, baseline, steps, quadrature, target)
            }
            AttributionMethod::DeepLift => deeplift_rescale_row(net, x, baseline, target),
            AttributionMethod::FeatureAblation => feature_ablation_row(net, x, baseline, target),
            AttributionMethod::ShapleyValueSampling {
                n_permutations,
                exhaustive,
            } => shapley_value_sampling_row(net, x, baseline, n_permutations, exhaustive, seed, target),
            AttributionMethod::ExactShapley => exact_shapley(net, x, baseline, target),
            AttributionMethod::KernelShap { budget } => kernel_shap_row(net, x, baseline, budget, seed, target),
            AttributionMethod::Lime {
                n_samples,
                kernel_width,
                regularisation,
                exhaustive,
            } => lime_row(
                net,
                x,
                baseline,
                LimeOptions {
                    n_samples,
                    kernel_width,
                    regularisation,
                    exhaustive,
                },
                seed,
                target,
            ),
        }
    }
}

/// A method together with its baseline and seed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttributionMethodConfig {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub method: AttributionMethod,
    #[cfg_attr(feature = "serde", serde(default))]
    pub baseline: Baseline,
    #[cfg_attr(feature = "serde", serde(default))]
    pub target: TargetSpec,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

impl AttributionMethodConfig {
    pub fn new(method: AttributionMethod) -> Self {
        Self {
            method,
            baseline: Baseline::Zero,
            target: TargetSpec::Scalar,
            seed: 0,
        }
    }

    pub fn with_baseline(mut self, baseline: Baseline) -> Self {
        self.baseline = baseline;
        self
    }

    pub fn with_target(mut self, target: TargetSpec) -> Self {
        self.target = target;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Seed used for row `index`.
    pub fn row_seed(&self, index: usize) -> u64 {
        seed::derive(self.seed, index as u64)
    }

    /// Attributes row `index` of a matrix; errors carry the row index.
    pub fn attribute_one(&self, net: &FeedForwardNet, x: &[f64], index: usize) -> Result<Vec<f64>> {
        let run = || -> Result<Vec<f64>> {
            let target = self.target.resolve(net, x)?;
            let b = self.baseline.resolve(net, x)?;
            let phi = self.method.attribute_row(net, x, &b, target, self.row_seed(index))?;
            if phi.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidNet("attribution is not finite".into()));
            }
            Ok(phi)
        };
        run().map_err(|e| e.at_sample(index))
    }

    /// Attributes every row of `x` sequentially.
    pub fn attribute(&self, net: &FeedForwardNet, x: &Matrix) -> Result<AttributionMatrix> {
        self.method.validate()?;
        check_dim(net.input_dim(), x.cols())?;
        let mut values = Matrix::zeros(x.rows(), x.cols());
        for (i, row) in x.iter_rows().enumerate() {
            let phi = self.attribute_one(net, row, i)?;
            values.row_mut(i).copy_from_slice(&phi);
        }
        Ok(AttributionMatrix {
            values,
            config: self.clone(),
            elapsed: None,
        })
    }
}

/// Per-sample attribution scores of one method under one target.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMatrix {
    pub values: Matrix,
    pub config: AttributionMethodConfig,
    /// Wall-clock time, filled in by callers that can measure it.
    pub elapsed: Option<Duration>,
}

impl AttributionMatrix {
    pub fn new(values: Matrix, config: AttributionMethodConfig) -> Self {
        Self {
            values,
            config,
            elapsed: None,
        }
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }
}

fn run(
    method: AttributionMethod,
    net: &FeedForwardNet,
    x: &Matrix,
    baseline: &Baseline,
    target: TargetSpec,
    seed: u64,
) -> Result<AttributionMatrix> {
    AttributionMethodConfig {
        method,
        baseline: baseline.clone(),
        target,
        seed,
    }
    .attribute(net, x)
}

pub fn input_x_gradient(net: &FeedForwardNet, x: &Matrix, target: TargetSpec) -> Result<AttributionMatrix> {
    run(AttributionMethod::InputXGradient, net, x, &Baseline::Zero, target, 0)
}

pub fn integrated_gradients(
    net: &FeedForwardNet,
    x: &Matrix,
    baseline: &Baseline,
    steps: usize,
    target: TargetSpec,
) -> Result<AttributionMatrix> {
    let method = AttributionMethod::IntegratedGradients {
        steps,
        quadrature: IgQuadrature::default(),
    };
    run(method, net, x, baseline, target, 0)
}

pub fn deeplift_rescale(
    net: &FeedForwardNet,
    x: &Matrix,
    baseline: &Baseline,
    target: TargetSpec,
) -> Result<AttributionMatrix> {
    run(AttributionMethod::DeepLift, net, x, baseline, target, 0)
}

pub fn feature_ablation(
    net: &FeedForwardNet,
    x: &Matrix,
    baseline: &Baseline,
    target: TargetSpec,
) -> Result<AttributionMatrix> {
    run(AttributionMethod::FeatureAblation, net, x, baseline, target, 0)
}

pub fn shapley_value_sampling(
    net: &FeedForwardNet,
    x: &Matrix,
    baseline: &Baseline,
    n_permutations: usize,
    seed: u64,
    target: TargetSpec,
) -> Result<AttributionMatrix> {
    let method = AttributionMethod::ShapleyValueSampling {
        n_permutations,
        exhaustive: false,
    };
    run(method, net, x, baseline, target, seed)
}

pub fn kernel_shap(
    net: &FeedForwardNet,
    x: &Matrix,
    baseline: &Baseline,
    budget: usize,
    seed: u64,
    target: TargetSpec,
) -> Result<AttributionMatrix> {
    run(AttributionMethod::KernelShap { budget }, net, x, baseline, target, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn lime(
    net: &FeedForwardNet,
    x: &Matrix,
    baseline: &Baseline,
    n_samples: usize,
    kernel_width: Option<f64>,
    regularisation: Regularisation,
    seed: u64,
    target: TargetSpec,
) -> Result<AttributionMatrix> {
    let method = AttributionMethod::Lime {
        n_samples,
        kernel_width,
        regularisation,
        exhaustive: false,
    };
    run(method, net, x, baseline, target, seed)
}
