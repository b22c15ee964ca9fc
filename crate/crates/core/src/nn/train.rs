//! Mini-batch trainer for the comparison arm: a rectifier MLP fitted with
//! Adam, keeping the parameters of the epoch with the lowest validation loss.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use super::target::argmax;
use super::{relu, softmax_in_place, FeedForwardNet, Layer, Linear};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Loss {
    SquaredError,
    /// Softmax cross-entropy against the arg-max class of each label row.
    /// The returned network ends in a softmax layer.
    CrossEntropy,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub hidden_widths: Vec<usize>,
    pub loss: Loss,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_widths: vec![100, 100, 100],
            loss: Loss::SquaredError,
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden_widths.contains(&0) {
            return Err(Error::InvalidConfig("hidden widths must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub best_epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Validation accuracy, reported for cross-entropy training.
    pub val_accuracy: Option<f64>,
}

struct Dense {
    in_dim: usize,
    out_dim: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Adam {
    fn step(&mut self, lr: f64, params: &mut [&mut Vec<f64>], grads: &[Vec<f64>]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(BETA1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(BETA2, f64::from(self.t));
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / (libm::sqrt(v[i] / c2) + EPS);
            }
        }
    }
}

type Snapshot = Vec<(Vec<f64>, Vec<f64>)>;

struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    fn init(widths: &[usize], rng: &mut seed::Rng) -> Self {
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let (i, o) = (w[0], w[1]);
                let normal = Normal::new(0.0, libm::sqrt(2.0 / i as f64)).unwrap();
                // the output layer starts at zero so the untrained net is the
                // constant 0 rather than a random function
                let w = if k == last {
                    vec![0.0; i * o]
                } else {
                    (0..i * o).map(|_| normal.sample(rng)).collect()
                };
                Dense {
                    in_dim: i,
                    out_dim: o,
                    w,
                    b: vec![0.0; o],
                }
            })
            .collect();
        Self { layers }
    }

    /// Batched forward pass; returns activations per layer (post-ReLU for
    /// hidden layers, raw outputs for the last).
    fn forward(&self, x: &[f64], batch: usize) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let input = &acts[k];
            let mut out = vec![0.0; batch * l.out_dim];
            for s in 0..batch {
                let xs = &input[s * l.in_dim..(s + 1) * l.in_dim];
                for j in 0..l.out_dim {
                    let wr = &l.w[j * l.in_dim..(j + 1) * l.in_dim];
                    let z = l.b[j] + wr.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
                    out[s * l.out_dim + j] = if k < last { relu(z) } else { z };
                }
            }
            acts.push(out);
        }
        acts
    }

    fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    fn into_net(self, softmax: bool) -> Result<FeedForwardNet> {
        let in_dim = self.layers[0].in_dim;
        let n = self.layers.len();
        let mut layers = Vec::new();
        for (k, d) in self.layers.into_iter().enumerate() {
            layers.push(Layer::Linear(Linear::new(d.in_dim, d.out_dim, d.w, d.b)?));
            if k + 1 < n {
                layers.push(Layer::Relu);
            }
        }
        if softmax {
            layers.push(Layer::Softmax);
        }
        FeedForwardNet::new(in_dim, layers)
    }
}

/// Per-sample loss and output gradient for a batch of raw outputs.
fn loss_and_grad(loss: Loss, out: &mut [f64], y: &[f64], k: usize, grad: bool) -> f64 {
    let batch = out.len() / k;
    let mut total = 0.0;
    for s in 0..batch {
        let o = &mut out[s * k..(s + 1) * k];
        let t = &y[s * k..(s + 1) * k];
        match loss {
            Loss::SquaredError => {
                for j in 0..k {
                    let d = o[j] - t[j];
                    total += d * d / k as f64;
                    if grad {
                        o[j] = 2.0 * d / k as f64;
                    }
                }
            }
            Loss::CrossEntropy => {
                let c = argmax(t);
                softmax_in_place(o);
                total -= libm::log(o[c].max(1e-300));
                if grad {
                    o[c] -= 1.0;
                }
            }
        }
    }
    total
}

fn evaluate(mlp: &Mlp, loss: Loss, x: &Matrix, y: &Matrix) -> (f64, Option<f64>) {
    let n = x.rows();
    let k = mlp.out_dim();
    let mut out = mlp.forward(x.as_slice(), n).pop().unwrap();
    let acc = (loss == Loss::CrossEntropy).then(|| {
        let hits = (0..n)
            .filter(|&s| argmax(&out[s * k..(s + 1) * k]) == argmax(y.row(s)))
            .count();
        hits as f64 / n as f64
    });
    let l = loss_and_grad(loss, &mut out, y.as_slice(), k, false);
    (l / n as f64, acc)
}

/// Fits a rectifier MLP with `cfg.hidden_widths` hidden layers.
///
/// Labels are a `samples × outputs` matrix; for cross-entropy each row is a
/// class score vector whose arg-max is the class. Deterministic for a fixed
/// `cfg.seed`.
pub fn train_mlp(
    train_x: &Matrix,
    train_y: &Matrix,
    val_x: &Matrix,
    val_y: &Matrix,
    cfg: &TrainConfig,
) -> Result<(FeedForwardNet, TrainReport)> {
    cfg.validate()?;
    check_dim(train_x.rows(), train_y.rows())?;
    check_dim(val_x.rows(), val_y.rows())?;
    check_dim(train_x.cols(), val_x.cols())?;
    check_dim(train_y.cols(), val_y.cols())?;
    if train_x.rows() == 0 || val_x.rows() == 0 || train_x.cols() == 0 || train_y.cols() == 0 {
        return Err(Error::InvalidConfig("empty training or validation split".into()));
    }

    let mut rng = seed::rng(cfg.seed);
    let mut widths = vec![train_x.cols()];
    widths.extend_from_slice(&cfg.hidden_widths);
    widths.push(train_y.cols());
    let mut mlp = Mlp::init(&widths, &mut rng);
    let mut adam = Adam {
        m: mlp.layers.iter().flat_map(|l| [vec![0.0; l.w.len()], vec![0.0; l.b.len()]]).collect(),
        v: mlp.layers.iter().flat_map(|l| [vec![0.0; l.w.len()], vec![0.0; l.b.len()]]).collect(),
        t: 0,
    };

    let n = train_x.rows();
    let d_in = train_x.cols();
    let k = train_y.cols();
    let mut order: Vec<usize> = (0..n).collect();
    // (val loss, epoch, train loss, val accuracy, weights and biases per layer)
    let mut best: Option<(f64, usize, f64, Option<f64>, Snapshot)> = None;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let bs = chunk.len();
            let mut xb = Vec::with_capacity(bs * d_in);
            let mut yb = Vec::with_capacity(bs * k);
            for &i in chunk {
                xb.extend_from_slice(train_x.row(i));
                yb.extend_from_slice(train_y.row(i));
            }
            let mut acts = mlp.forward(&xb, bs);
            let mut g = acts.pop().unwrap();
            epoch_loss += loss_and_grad(cfg.loss, &mut g, &yb, k, true);
            for v in g.iter_mut() {
                *v /= bs as f64;
            }

            let mut grads: Vec<Vec<f64>> = Vec::with_capacity(2 * mlp.layers.len());
            for (li, l) in mlp.layers.iter().enumerate().rev() {
                let input = &acts[li];
                let mut gw = vec![0.0; l.w.len()];
                let mut gb = vec![0.0; l.b.len()];
                let mut gin = vec![0.0; bs * l.in_dim];
                for s in 0..bs {
                    let xs = &input[s * l.in_dim..(s + 1) * l.in_dim];
                    let gis = &mut gin[s * l.in_dim..(s + 1) * l.in_dim];
                    for j in 0..l.out_dim {
                        let gj = g[s * l.out_dim + j];
                        if gj == 0.0 {
                            continue;
                        }
                        gb[j] += gj;
                        let wr = &l.w[j * l.in_dim..(j + 1) * l.in_dim];
                        let gwr = &mut gw[j * l.in_dim..(j + 1) * l.in_dim];
                        for i in 0..l.in_dim {
                            gwr[i] += gj * xs[i];
                            gis[i] += gj * wr[i];
                        }
                    }
                }
                if li > 0 {
                    // input is a post-ReLU activation: gate by its sign
                    for (gv, a) in gin.iter_mut().zip(input) {
                        if *a <= 0.0 {
                            *gv = 0.0;
                        }
                    }
                }
                grads.push(gb);
                grads.push(gw);
                g = gin;
            }
            grads.reverse();
            let mut params: Vec<&mut Vec<f64>> = mlp
                .layers
                .iter_mut()
                .flat_map(|l| [&mut l.w, &mut l.b])
                .collect();
            adam.step(cfg.learning_rate, &mut params, &grads);
        }
        let train_loss = epoch_loss / n as f64;
        if !train_loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        let (val_loss, val_acc) = evaluate(&mlp, cfg.loss, val_x, val_y);
        if !val_loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        if best.as_ref().is_none_or(|b| val_loss < b.0) {
            let snapshot = mlp.layers.iter().map(|l| (l.w.clone(), l.b.clone())).collect();
            best = Some((val_loss, epoch, train_loss, val_acc, snapshot));
        }
    }

    let (val_loss, best_epoch, train_loss, val_accuracy, snapshot) = best.unwrap();
    for (l, (w, b)) in mlp.layers.iter_mut().zip(snapshot) {
        l.w = w;
        l.b = b;
    }
    let net = mlp.into_net(cfg.loss == Loss::CrossEntropy)?;
    Ok((
        net,
        TrainReport {
            best_epoch,
            train_loss,
            val_loss,
            val_accuracy,
        },
    ))
}
