//! Dense feed-forward networks built from linear, rectifier and softmax
//! layers, with exact forward evaluation, reverse-mode input gradients and a
//! small mini-batch trainer.

mod net;
mod target;
mod train;

pub use net::{FeedForwardNet, Layer, Linear};
pub use target::{ClassSelector, Target, TargetSpec};
pub use train::{train_mlp, Loss, TrainConfig, TrainReport};

/// Index of the largest entry (first on ties).
pub fn argmax_of(v: &[f64]) -> usize {
    target::argmax(v)
}

pub(crate) fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Derivative of the rectifier; the kink at exactly zero gets slope 0.
pub(crate) fn relu_grad(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}
