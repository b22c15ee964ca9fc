use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::forge::{closed_form, Connective, ModelFamily, ModelSpec};
use crate::linalg::Matrix;

/// Ground-truth payload of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    /// Exact per-sample attributions, same shape as the features.
    Exact(Matrix),
    /// Relevance mask over features: `true` for features that may carry
    /// attribution, `false` for features that must not.
    Mask(Vec<bool>),
    None,
}

impl GroundTruth {
    pub fn kind(&self) -> &'static str {
        match self {
            GroundTruth::Exact(_) => "exact",
            GroundTruth::Mask(_) => "mask",
            GroundTruth::None => "none",
        }
    }
}

fn m(spec: &ModelSpec, x: &[f64]) -> Result<f64> {
    Ok(closed_form(spec, x)?[0])
}

fn with(x: &[f64], zeros: &[usize]) -> Vec<f64> {
    let mut v = x.to_vec();
    for &i in zeros {
        v[i] = 0.0;
    }
    v
}

/// Ablation ground truth of `x` against the all-zero reference.
///
/// Features are ablated one at a time with `M(x) − M(x_{−i})`, except for
/// the ordered pairs: a conflicting pair ablates the cancellation feature
/// first, an interacting pair the continuous feature first. Boolean AND/OR
/// units use [`ground_truth_boolean_unit`].
pub fn ground_truth_exact(spec: &ModelSpec, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(spec.n_features(), x.len())?;
    let n = x.len();
    let single = |i: usize| -> Result<f64> { Ok(m(spec, x)? - m(spec, &with(x, &[i]))?) };
    match &spec.model {
        ModelFamily::Weighted { .. } | ModelFamily::PertinentNegatives { .. } => {
            (0..n).map(single).collect()
        }
        ModelFamily::Conflicting { weights } => {
            let k = weights.len();
            let mut fa = vec![0.0; n];
            for i in 0..k {
                let (xi, ci) = (i, k + i);
                let c_off = with(x, &[ci]);
                fa[ci] = m(spec, x)? - m(spec, &c_off)?;
                fa[xi] = m(spec, &c_off)? - m(spec, &with(x, &[ci, xi]))?;
            }
            Ok(fa)
        }
        ModelFamily::Interacting(p) => {
            let mut fa = vec![0.0; n];
            for pair in &p.pairs {
                let (xi, ci) = (pair.continuous, pair.categorical);
                let x_off = with(x, &[xi]);
                fa[xi] = m(spec, x)? - m(spec, &x_off)?;
                fa[ci] = m(spec, &x_off)? - m(spec, &with(x, &[xi, ci]))?;
            }
            for &(i, _) in &p.non_interacting {
                fa[i] = single(i)?;
            }
            Ok(fa)
        }
        ModelFamily::Boolean { .. } => {
            let ast = spec.boolean_ast().unwrap()?;
            match ast.as_unit() {
                Some(conn) => ground_truth_boolean_unit(conn, x),
                None => Err(Error::Unsupported("generic Boolean formulas have no exact ground truth".into())),
            }
        }
        ModelFamily::Shattered { .. } | ModelFamily::Uncertainty(_) => Err(Error::Unsupported(
            format!("the {} family has no exact ground truth", spec.family()),
        )),
    }
}

fn check_pm1(b: &[f64]) -> Result<()> {
    match b.iter().find(|&&v| v != 1.0 && v != -1.0) {
        Some(v) => Err(Error::OutOfSupport(format!("Boolean input {v} is not ±1"))),
        None => Ok(()),
    }
}

fn unit_value(conn: Connective, b: &[f64]) -> f64 {
    let truth = match conn {
        Connective::And => b.iter().all(|&v| v > 0.0),
        Connective::Or => b.iter().any(|&v| v > 0.0),
    };
    if truth {
        1.0
    } else {
        -1.0
    }
}

/// Reference point `b⁻` of a Boolean input: all atoms false when the output
/// is true, all atoms true otherwise.
pub fn boolean_reference(output: f64, n: usize) -> Vec<f64> {
    vec![if output > 0.0 { -1.0 } else { 1.0 }; n]
}

/// Ground truth of an AND/OR unit at `b ∈ {−1, +1}ⁿ`.
///
/// The output change `M(b) − M(b⁻)` is split evenly over the atoms that
/// differ from `b⁻`; atoms equal to their reference value get 0.
pub fn ground_truth_boolean_unit(conn: Connective, b: &[f64]) -> Result<Vec<f64>> {
    check_pm1(b)?;
    let out = unit_value(conn, b);
    let reference = boolean_reference(out, b.len());
    let delta = out - unit_value(conn, &reference);
    let changed = b.iter().zip(&reference).filter(|(u, v)| u != v).count();
    Ok(b.iter()
        .zip(&reference)
        .map(|(u, v)| if u != v { delta / changed as f64 } else { 0.0 })
        .collect())
}
