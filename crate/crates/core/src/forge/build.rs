use alloc::vec;
use alloc::vec::Vec;

use super::boolean::compile_boolean;
use super::spec::{ModelFamily, ModelSpec};
use crate::error::Result;
use crate::nn::{FeedForwardNet, Layer, Linear};

/// One hidden rectifier layer feeding a single linear output.
struct OneHidden {
    n_inputs: usize,
    rows: Vec<Vec<f64>>,
    bias: Vec<f64>,
    out: Vec<f64>,
}

impl OneHidden {
    fn new(n_inputs: usize) -> Self {
        Self {
            n_inputs,
            rows: Vec::new(),
            bias: Vec::new(),
            out: Vec::new(),
        }
    }

    /// Adds `coef * ReLU(Σ terms + bias)` to the output.
    fn unit(&mut self, terms: &[(usize, f64)], bias: f64, coef: f64) {
        let mut row = vec![0.0; self.n_inputs];
        for &(i, w) in terms {
            row[i] += w;
        }
        self.rows.push(row);
        self.bias.push(bias);
        self.out.push(coef);
    }

    /// Adds `w * x_i` through the pair `ReLU(w x_i) - ReLU(-w x_i)`.
    fn passthrough(&mut self, i: usize, w: f64) {
        self.unit(&[(i, w)], 0.0, 1.0);
        self.unit(&[(i, -w)], 0.0, -1.0);
    }

    fn finish(self) -> Result<FeedForwardNet> {
        let hidden = Linear::from_rows(&self.rows, self.bias)?;
        let out = Linear::from_rows(&[self.out], vec![0.0])?;
        FeedForwardNet::new(
            self.n_inputs,
            vec![Layer::Linear(hidden), Layer::Relu, Layer::Linear(out)],
        )
    }
}

/// Builds the handcrafted network for `spec`.
///
/// * weighted: `Σ ReLU(w_i x_i) − ReLU(−w_i x_i)`
/// * conflicting: `ReLU(w_i x_i − M c_i) − ReLU(−w_i x_i − M c_i)` with
///   `M = B|w_i| + 1`, which vanishes whenever `c_i = 1`
/// * pertinent negatives: `w_i x_i + w_i m ReLU(1 − x_i)` for `i ∈ P`
/// * shattered: `Σ ReLU(w_i x_i + b_i)`
/// * interacting: `w1 x + (w2 − w1)[ReLU(x − M(1−c)) − ReLU(−x − M(1−c))] + w c`
///   with `M = B + 1`
/// * uncertainty: one linear layer of logits followed by softmax
/// * boolean: see [`compile_boolean`]
pub fn build_model(spec: &ModelSpec) -> Result<FeedForwardNet> {
    spec.validate()?;
    let bound = spec.input_bound;
    let n = spec.n_features();
    match &spec.model {
        ModelFamily::Weighted { weights } => {
            let mut h = OneHidden::new(n);
            for (i, &w) in weights.iter().enumerate() {
                h.passthrough(i, w);
            }
            h.finish()
        }
        ModelFamily::Conflicting { weights } => {
            let m = weights.len();
            let mut h = OneHidden::new(n);
            for (i, &w) in weights.iter().enumerate() {
                let gate = bound * w.abs() + 1.0;
                h.unit(&[(i, w), (m + i, -gate)], 0.0, 1.0);
                h.unit(&[(i, -w), (m + i, -gate)], 0.0, -1.0);
            }
            h.finish()
        }
        ModelFamily::PertinentNegatives { weights, params } => {
            let mut h = OneHidden::new(n);
            for (i, &w) in weights.iter().enumerate() {
                h.passthrough(i, w);
                if params.pn_indices.contains(&i) {
                    h.unit(&[(i, -1.0)], 1.0, w * params.multiplier);
                }
            }
            h.finish()
        }
        ModelFamily::Shattered { weights, offsets } => {
            let mut h = OneHidden::new(n);
            for (i, (&w, &b)) in weights.iter().zip(offsets).enumerate() {
                h.unit(&[(i, w)], b, 1.0);
            }
            h.finish()
        }
        ModelFamily::Interacting(p) => {
            let gate = bound + 1.0;
            let mut h = OneHidden::new(n);
            for pair in &p.pairs {
                let (x, c) = (pair.continuous, pair.categorical);
                let dw = pair.w2 - pair.w1;
                h.passthrough(x, pair.w1);
                h.passthrough(c, pair.categorical_weight);
                // gate - gate*c = M(1 - c)
                h.unit(&[(x, 1.0), (c, gate)], -gate, dw);
                h.unit(&[(x, -1.0), (c, gate)], -gate, -dw);
            }
            for &(i, w) in &p.non_interacting {
                h.passthrough(i, w);
            }
            h.finish()
        }
        ModelFamily::Uncertainty(p) => {
            let rows: Vec<Vec<f64>> = p
                .standard
                .iter()
                .map(|&(s, w)| {
                    let mut row = vec![0.0; n];
                    row[s] = w;
                    for &(k, wk) in &p.common {
                        row[k] = wk;
                    }
                    row
                })
                .collect();
            let logits = Linear::from_rows(&rows, vec![0.0; rows.len()])?;
            FeedForwardNet::new(n, vec![Layer::Linear(logits), Layer::Softmax])
        }
        ModelFamily::Boolean { .. } => compile_boolean(&spec.boolean_ast().unwrap()?),
    }
}
