use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nn::{relu_grad, FeedForwardNet, Layer, Target};

/// How the integrated-gradients path integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum IgQuadrature {
    /// Split the path wherever a rectifier changes state. Each piece is
    /// integrated exactly (one midpoint) when the target is affine on it,
    /// and with a midpoint rule proportional to its length otherwise.
    #[default]
    Segmented,
    /// Plain midpoint Riemann sum with `steps` equally spaced nodes.
    Midpoint,
}

/// `x ⊙ ∇f(x)`.
pub fn input_x_gradient_row(net: &FeedForwardNet, x: &[f64], target: Target) -> Result<Vec<f64>> {
    let g = net.input_gradient(x, target)?;
    Ok(x.iter().zip(&g).map(|(a, b)| a * b).collect())
}

/// Straight-line path integral of the gradient from `baseline` to `x`,
/// scaled by `x − baseline`.
pub fn integrated_gradients_row(
    net: &FeedForwardNet,
    x: &[f64],
    baseline: &[f64],
    steps: usize,
    quadrature: IgQuadrature,
    target: Target,
) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidConfig("IG steps must be at least 1".into()));
    }
    let n = x.len();
    let dir: Vec<f64> = x.iter().zip(baseline).map(|(a, b)| a - b).collect();
    if dir.iter().all(|&d| d == 0.0) {
        return Ok(vec![0.0; n]);
    }
    let nodes = match quadrature {
        IgQuadrature::Midpoint => (0..steps)
            .map(|k| ((k as f64 + 0.5) / steps as f64, 1.0 / steps as f64))
            .collect(),
        IgQuadrature::Segmented => segmented_nodes(net, baseline, &dir, steps, target),
    };
    let mut acc = vec![0.0; n];
    let mut z = vec![0.0; n];
    for (t, w) in nodes {
        for i in 0..n {
            z[i] = baseline[i] + t * dir[i];
        }
        let g = net.input_gradient(&z, target)?;
        for i in 0..n {
            acc[i] += w * g[i];
        }
    }
    Ok(acc.iter().zip(&dir).map(|(a, d)| a * d).collect())
}

/// One affine piece of the path: `t ∈ [t0, t1]`, activations `o + s·t`.
struct Piece {
    t0: f64,
    t1: f64,
    offset: Vec<f64>,
    slope: Vec<f64>,
}

const KINK_EPS: f64 = 1e-12;

/// Quadrature nodes `(t, weight)` on `[0, 1]` whose pieces contain no
/// rectifier kink in their interior.
fn segmented_nodes(
    net: &FeedForwardNet,
    baseline: &[f64],
    dir: &[f64],
    steps: usize,
    target: Target,
) -> Vec<(f64, f64)> {
    let (depth, _) = target.seed(net);
    let mut pieces = vec![Piece {
        t0: 0.0,
        t1: 1.0,
        offset: baseline.to_vec(),
        slope: dir.to_vec(),
    }];
    let mut smooth_tail = false;
    for layer in &net.layers()[..depth] {
        match layer {
            Layer::Linear(l) => {
                for p in &mut pieces {
                    p.offset = l.apply(&p.offset);
                    p.slope = l.apply_linear(&p.slope);
                }
            }
            Layer::Relu => {
                let mut next = Vec::with_capacity(pieces.len());
                for p in pieces {
                    split_at_kinks(p, &mut next);
                }
                pieces = next;
            }
            Layer::Softmax => {
                smooth_tail = true;
                break;
            }
        }
    }
    let mut nodes = Vec::new();
    for p in &pieces {
        let len = p.t1 - p.t0;
        let k = if smooth_tail {
            libm::ceil(steps as f64 * len).max(1.0) as usize
        } else {
            1
        };
        let h = len / k as f64;
        nodes.extend((0..k).map(|j| (p.t0 + (j as f64 + 0.5) * h, h)));
    }
    nodes
}

fn split_at_kinks(p: Piece, out: &mut Vec<Piece>) {
    let mut cuts: Vec<f64> = p
        .offset
        .iter()
        .zip(&p.slope)
        .filter(|(_, &s)| s != 0.0)
        .map(|(&o, &s)| -o / s)
        .filter(|&t| t > p.t0 + KINK_EPS && t < p.t1 - KINK_EPS)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| *a - *b <= KINK_EPS);
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(p.t0);
    bounds.extend(cuts);
    bounds.push(p.t1);
    for w in bounds.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let tm = 0.5 * (t0 + t1);
        let (offset, slope) = p
            .offset
            .iter()
            .zip(&p.slope)
            .map(|(&o, &s)| {
                let on = relu_grad(o + s * tm);
                (o * on, s * on)
            })
            .unzip();
        out.push(Piece { t0, t1, offset, slope });
    }
}
