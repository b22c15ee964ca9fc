use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::boolean::{parse_boolean, BooleanAst};
use crate::error::{Error, Result};

pub const DEFAULT_INPUT_BOUND: f64 = 10.0;
/// Smallest admissible weight magnitude; near-zero weights make units that
/// no attribution method can tell apart.
pub const MIN_ABS_WEIGHT: f64 = 0.05;

/// Domain of one input column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FeatureKind {
    /// Real valued, within `[-B, B]`.
    Continuous,
    /// `0` or `1`.
    Categorical01,
    /// `-1` (false) or `+1` (true).
    BooleanPm1,
}

impl FeatureKind {
    pub fn contains(&self, v: f64, bound: f64) -> bool {
        match self {
            FeatureKind::Continuous => v.is_finite() && v.abs() <= bound,
            FeatureKind::Categorical01 => v == 0.0 || v == 1.0,
            FeatureKind::BooleanPm1 => v == -1.0 || v == 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    Weighted,
    Conflicting,
    PertinentNegatives,
    Shattered,
    Interacting,
    Uncertainty,
    Boolean,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Weighted,
        Family::Conflicting,
        Family::PertinentNegatives,
        Family::Shattered,
        Family::Interacting,
        Family::Uncertainty,
        Family::Boolean,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Weighted => "weighted",
            Family::Conflicting => "conflicting",
            Family::PertinentNegatives => "pertinent_negatives",
            Family::Shattered => "shattered",
            Family::Interacting => "interacting",
            Family::Uncertainty => "uncertainty",
            Family::Boolean => "boolean",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PertinentNegativeParams {
    /// Indices of the pertinent-negative (categorical) features.
    pub pn_indices: Vec<usize>,
    pub multiplier: f64,
}

/// A continuous feature whose weight switches with a categorical partner:
/// `w1` when the partner is 0, `w2` when it is 1. The partner itself adds
/// `categorical_weight * c`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct InteractingPair {
    pub continuous: usize,
    pub categorical: usize,
    pub w1: f64,
    pub w2: f64,
    pub categorical_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct InteractingParams {
    pub n_features: usize,
    pub pairs: Vec<InteractingPair>,
    /// `(feature, weight)` for continuous features outside any pair.
    pub non_interacting: Vec<(usize, f64)>,
}

/// Classifier whose class `c` logit is `w_c x_{s_c} + Σ_k w_k x_k` over the
/// common features `k`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct UncertaintyParams {
    pub n_features: usize,
    /// `(feature, weight)` per class, in class order.
    pub standard: Vec<(usize, f64)>,
    /// `(feature, weight)` of the common features.
    pub common: Vec<(usize, f64)>,
}

impl UncertaintyParams {
    pub fn mask(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_features];
        for &(i, _) in &self.standard {
            m[i] = 1.0;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case", deny_unknown_fields))]
pub enum ModelFamily {
    Weighted {
        weights: Vec<f64>,
    },
    /// Inputs are `n` continuous features followed by their `n`
    /// cancellation features.
    Conflicting {
        weights: Vec<f64>,
    },
    PertinentNegatives {
        weights: Vec<f64>,
        params: PertinentNegativeParams,
    },
    Shattered {
        weights: Vec<f64>,
        offsets: Vec<f64>,
    },
    Interacting(InteractingParams),
    Uncertainty(UncertaintyParams),
    Boolean {
        formula: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ModelSpec {
    pub input_bound: f64,
    pub model: ModelFamily,
}

impl ModelSpec {
    pub fn new(model: ModelFamily) -> Self {
        Self {
            input_bound: DEFAULT_INPUT_BOUND,
            model,
        }
    }

    pub fn family(&self) -> Family {
        match self.model {
            ModelFamily::Weighted { .. } => Family::Weighted,
            ModelFamily::Conflicting { .. } => Family::Conflicting,
            ModelFamily::PertinentNegatives { .. } => Family::PertinentNegatives,
            ModelFamily::Shattered { .. } => Family::Shattered,
            ModelFamily::Interacting(_) => Family::Interacting,
            ModelFamily::Uncertainty(_) => Family::Uncertainty,
            ModelFamily::Boolean { .. } => Family::Boolean,
        }
    }

    pub fn boolean_ast(&self) -> Option<Result<BooleanAst>> {
        match &self.model {
            ModelFamily::Boolean { formula } => Some(parse_boolean(formula)),
            _ => None,
        }
    }

    pub fn n_features(&self) -> usize {
        match &self.model {
            ModelFamily::Weighted { weights }
            | ModelFamily::PertinentNegatives { weights, .. }
            | ModelFamily::Shattered { weights, .. } => weights.len(),
            ModelFamily::Conflicting { weights } => 2 * weights.len(),
            ModelFamily::Interacting(p) => p.n_features,
            ModelFamily::Uncertainty(p) => p.n_features,
            ModelFamily::Boolean { formula } => {
                parse_boolean(formula).map_or(0, |a| a.variables.len())
            }
        }
    }

    pub fn n_outputs(&self) -> usize {
        match &self.model {
            ModelFamily::Uncertainty(p) => p.standard.len(),
            _ => 1,
        }
    }

    pub fn feature_kinds(&self) -> Vec<FeatureKind> {
        let n = self.n_features();
        let mut kinds = vec![FeatureKind::Continuous; n];
        match &self.model {
            ModelFamily::Conflicting { weights } => {
                for k in &mut kinds[weights.len()..] {
                    *k = FeatureKind::Categorical01;
                }
            }
            ModelFamily::PertinentNegatives { params, .. } => {
                for &i in &params.pn_indices {
                    kinds[i] = FeatureKind::Categorical01;
                }
            }
            ModelFamily::Interacting(p) => {
                for pair in &p.pairs {
                    kinds[pair.categorical] = FeatureKind::Categorical01;
                }
            }
            ModelFamily::Boolean { .. } => kinds.fill(FeatureKind::BooleanPm1),
            _ => {}
        }
        kinds
    }

    /// Checks every structural invariant of the spec.
    pub fn validate(&self) -> Result<()> {
        let b = self.input_bound;
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid(format!("input bound must be positive, got {b}")));
        }
        match &self.model {
            ModelFamily::Weighted { weights } | ModelFamily::Conflicting { weights } => {
                check_weights(weights)
            }
            ModelFamily::PertinentNegatives { weights, params } => {
                check_weights(weights)?;
                if params.pn_indices.is_empty() {
                    return Err(invalid("pertinent-negative index set is empty"));
                }
                check_unique_in_range(&params.pn_indices, weights.len())?;
                if !params.multiplier.is_finite() || params.multiplier == 1.0 {
                    return Err(invalid("multiplier must be finite and different from 1"));
                }
                Ok(())
            }
            ModelFamily::Shattered { weights, offsets } => {
                check_weights(weights)?;
                if offsets.len() != weights.len() || offsets.iter().any(|o| !o.is_finite()) {
                    return Err(invalid("need one finite offset per weight"));
                }
                Ok(())
            }
            ModelFamily::Interacting(p) => {
                let mut used: Vec<usize> = Vec::new();
                let mut any_interaction = false;
                for pair in &p.pairs {
                    check_weights(&[pair.w1, pair.w2, pair.categorical_weight])?;
                    any_interaction |= pair.w1 != pair.w2;
                    used.push(pair.continuous);
                    used.push(pair.categorical);
                }
                for &(i, w) in &p.non_interacting {
                    check_weights(&[w])?;
                    used.push(i);
                }
                check_unique_in_range(&used, p.n_features)?;
                if used.len() != p.n_features {
                    return Err(invalid("every feature must be paired or non-interacting"));
                }
                if !any_interaction {
                    return Err(invalid("at least one pair needs w1 != w2"));
                }
                Ok(())
            }
            ModelFamily::Uncertainty(p) => {
                if p.standard.is_empty() {
                    return Err(invalid("uncertainty model needs at least one standard feature"));
                }
                let used: Vec<usize> =
                    p.standard.iter().chain(&p.common).map(|&(i, _)| i).collect();
                let weights: Vec<f64> = p.standard.iter().chain(&p.common).map(|&(_, w)| w).collect();
                check_weights(&weights)?;
                check_unique_in_range(&used, p.n_features)?;
                if used.len() != p.n_features {
                    return Err(invalid("every feature must be standard or common"));
                }
                Ok(())
            }
            ModelFamily::Boolean { formula } => parse_boolean(formula).map(|_| ()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(invalid("no weights"));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || w.abs() < MIN_ABS_WEIGHT) {
        return Err(invalid(format!("weight {w} has magnitude below {MIN_ABS_WEIGHT}")));
    }
    Ok(())
}

fn check_unique_in_range(idx: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in idx {
        if i >= n {
            return Err(invalid(format!("feature index {i} out of range for {n} features")));
        }
        if core::mem::replace(&mut seen[i], true) {
            return Err(invalid(format!("feature index {i} used twice")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_weights_rejected() {
        let spec = ModelSpec::new(ModelFamily::Weighted {
            weights: vec![1.0, 0.01],
        });
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn multiplier_of_one_rejected() {
        let spec = ModelSpec::new(ModelFamily::PertinentNegatives {
            weights: vec![1.0],
            params: PertinentNegativeParams {
                pn_indices: vec![0],
                multiplier: 1.0,
            },
        });
        assert!(spec.validate().is_err());
    }

    #[test]
    fn interacting_needs_full_cover() {
        let spec = ModelSpec::new(ModelFamily::Interacting(InteractingParams {
            n_features: 3,
            pairs: vec![InteractingPair {
                continuous: 0,
                categorical: 1,
                w1: 1.0,
                w2: 5.0,
                categorical_weight: 2.0,
            }],
            non_interacting: vec![],
        }));
        assert!(spec.validate().is_err());
    }

    #[test]
    fn uncertainty_disjoint_sets() {
        let spec = ModelSpec::new(ModelFamily::Uncertainty(UncertaintyParams {
            n_features: 2,
            standard: vec![(0, 1.0), (1, 1.0)],
            common: vec![(1, 1.0)],
        }));
        assert!(spec.validate().is_err());
    }

    #[test]
    fn conflicting_kinds() {
        let spec = ModelSpec::new(ModelFamily::Conflicting {
            weights: vec![1.0, 2.0],
        });
        assert_eq!(spec.n_features(), 4);
        assert_eq!(spec.feature_kinds()[2], FeatureKind::Categorical01);
    }
}
