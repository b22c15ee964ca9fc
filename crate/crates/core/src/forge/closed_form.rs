use alloc::vec::Vec;

use rand::Rng as _;

use super::spec::{FeatureKind, ModelFamily, ModelSpec};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::nn::FeedForwardNet;
use crate::seed;

/// Direct evaluation of the model formula, independent of any network.
///
/// Inputs outside the support are rejected.
pub fn closed_form(spec: &ModelSpec, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(spec.n_features(), x.len())?;
    for (i, (k, &v)) in spec.feature_kinds().iter().zip(x).enumerate() {
        if !k.contains(v, spec.input_bound) {
            return Err(Error::OutOfSupport(alloc::format!("feature {i} = {v} ({k:?})")));
        }
    }
    let y = match &spec.model {
        ModelFamily::Weighted { weights } => weights.iter().zip(x).map(|(w, v)| w * v).sum(),
        ModelFamily::Conflicting { weights } => {
            let n = weights.len();
            (0..n)
                .map(|i| if x[n + i] == 1.0 { 0.0 } else { weights[i] * x[i] })
                .sum()
        }
        ModelFamily::PertinentNegatives { weights, params } => weights
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                if params.pn_indices.contains(&i) {
                    w * (x[i] + params.multiplier * (1.0 - x[i]))
                } else {
                    w * x[i]
                }
            })
            .sum(),
        ModelFamily::Shattered { weights, offsets } => weights
            .iter()
            .zip(offsets)
            .zip(x)
            .map(|((w, b), v)| (w * v + b).max(0.0))
            .sum(),
        ModelFamily::Interacting(p) => {
            let paired: f64 = p
                .pairs
                .iter()
                .map(|q| {
                    let (xi, ci) = (x[q.continuous], x[q.categorical]);
                    q.categorical_weight * ci + xi * (q.w1 * (1.0 - ci) + q.w2 * ci)
                })
                .sum();
            paired + p.non_interacting.iter().map(|&(i, w)| w * x[i]).sum::<f64>()
        }
        ModelFamily::Uncertainty(p) => {
            let shared: f64 = p.common.iter().map(|&(k, w)| w * x[k]).sum();
            let e: Vec<f64> = p
                .standard
                .iter()
                .map(|&(s, w)| libm::exp(w * x[s] + shared))
                .collect();
            let total: f64 = e.iter().sum();
            return Ok(e.into_iter().map(|v| v / total).collect());
        }
        ModelFamily::Boolean { .. } => spec.boolean_ast().unwrap()?.evaluate_pm1(x)?,
    };
    Ok(alloc::vec![y])
}

/// Random in-support inputs: continuous features uniform on `[-B, B]`,
/// categorical and Boolean features uniform over their two values.
pub fn support_probes(spec: &ModelSpec, count: usize, seed: u64) -> Matrix {
    let kinds = spec.feature_kinds();
    let mut rng = seed::rng(seed);
    let b = spec.input_bound;
    let mut data = Vec::with_capacity(count * kinds.len());
    for _ in 0..count {
        for k in &kinds {
            data.push(match k {
                FeatureKind::Continuous => rng.random_range(-b..=b),
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
    Matrix::from_vec(count, kinds.len(), data).unwrap()
}

/// Largest absolute difference between the network and the closed form
/// over `probes`.
pub fn validate_model(net: &FeedForwardNet, spec: &ModelSpec, probes: &Matrix) -> Result<f64> {
    let mut worst = 0.0_f64;
    for x in probes.iter_rows() {
        let a = net.forward(x)?;
        let b = closed_form(spec, x)?;
        check_dim(b.len(), a.len())?;
        for (u, v) in a.iter().zip(&b) {
            worst = worst.max((u - v).abs());
        }
    }
    Ok(worst)
}
