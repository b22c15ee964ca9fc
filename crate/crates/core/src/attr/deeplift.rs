use alloc::vec::Vec;

use crate::nn::{relu_grad, FeedForwardNet, Layer, Target};
use crate::Result;

/// Below this input difference a nonlinearity uses its local derivative
/// instead of the finite-difference multiplier.
pub const RESCALE_FALLBACK: f64 = 1e-10;

/// DeepLIFT with the rescale rule.
///
/// Multipliers are propagated from the target back to the input. Linear
/// layers pass them through their weights; rectifiers and the softmax are
/// treated unit by unit with multiplier `Δout/Δin`. For a normalised logit
/// target the seed is `e_c − 1/K`, which subtracts the mean contribution
/// over classes from the class-`c` contribution.
pub fn deeplift_rescale_row(
    net: &FeedForwardNet,
    x: &[f64],
    baseline: &[f64],
    target: Target,
) -> Result<Vec<f64>> {
    net.target_value(x, target)?;
    let (depth, seed) = target.seed(net);
    let ax = net.trace(x, depth);
    let ab = net.trace(baseline, depth);
    let mut m = seed;
    for k in (0..depth).rev() {
        let (xi, bi) = (&ax[k], &ab[k]);
        let (xo, bo) = (&ax[k + 1], &ab[k + 1]);
        m = match &net.layers()[k] {
            Layer::Linear(l) => l.transpose_apply(&m),
            Layer::Relu => (0..m.len())
                .map(|j| m[j] * rescale(xi[j], bi[j], xo[j], bo[j], || relu_grad(xi[j])))
                .collect(),
            Layer::Softmax => (0..m.len())
                .map(|j| m[j] * rescale(xi[j], bi[j], xo[j], bo[j], || xo[j] * (1.0 - xo[j])))
                .collect(),
        };
    }
    Ok(m.iter().zip(x.iter().zip(baseline)).map(|(mi, (a, b))| mi * (a - b)).collect())
}

fn rescale(xi: f64, bi: f64, xo: f64, bo: f64, local: impl Fn() -> f64) -> f64 {
    let din = xi - bi;
    if din.abs() < RESCALE_FALLBACK {
        local()
    } else {
        (xo - bo) / din
    }
}
