use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{relu, relu_grad, softmax_in_place, Target};
use crate::error::{check_dim, Error, Result};

/// Affine map `y = W x + b` with `W` stored row-major as `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn new(in_dim: usize, out_dim: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        let lin = Self {
            in_dim,
            out_dim,
            weight,
            bias,
        };
        lin.validate()?;
        Ok(lin)
    }

    /// Builds a layer from weight rows (one row per output unit).
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], bias: Vec<f64>) -> Result<Self> {
        let in_dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut weight = Vec::with_capacity(rows.len() * in_dim);
        for r in rows {
            check_dim(in_dim, r.as_ref().len())?;
            weight.extend_from_slice(r.as_ref());
        }
        Self::new(in_dim, rows.len(), weight, bias)
    }

    fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::InvalidNet("linear layer with a zero dimension".into()));
        }
        if self.weight.len() != self.in_dim * self.out_dim {
            return Err(Error::InvalidNet(format!(
                "weight has {} entries, expected {}x{}",
                self.weight.len(),
                self.out_dim,
                self.in_dim
            )));
        }
        if self.bias.len() != self.out_dim {
            return Err(Error::InvalidNet(format!(
                "bias has {} entries, expected {}",
                self.bias.len(),
                self.out_dim
            )));
        }
        if !self.weight.iter().chain(&self.bias).all(|v| v.is_finite()) {
            return Err(Error::InvalidNet("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.weight[j * self.in_dim..(j + 1) * self.in_dim]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.out_dim)
            .map(|j| self.bias[j] + self.row(j).iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    /// Linear part only (no bias), used for directions and multipliers.
    pub fn apply_linear(&self, x: &[f64]) -> Vec<f64> {
        (0..self.out_dim)
            .map(|j| self.row(j).iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    /// `Wᵀ g`.
    pub fn transpose_apply(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.in_dim];
        for (j, gj) in g.iter().enumerate() {
            if *gj == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.row(j)) {
                *o += w * gj;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Layer {
    Linear(Linear),
    Relu,
    Softmax,
}

impl Layer {
    fn out_dim(&self, in_dim: usize) -> usize {
        match self {
            Layer::Linear(l) => l.out_dim,
            Layer::Relu | Layer::Softmax => in_dim,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Layer::Linear(l) => l.apply(x),
            Layer::Relu => x.iter().map(|&v| relu(v)).collect(),
            Layer::Softmax => {
                let mut z = x.to_vec();
                softmax_in_place(&mut z);
                z
            }
        }
    }

    /// Vector-Jacobian product at input `x` with layer output `y`.
    pub(crate) fn backward(&self, x: &[f64], y: &[f64], g: &[f64]) -> Vec<f64> {
        match self {
            Layer::Linear(l) => l.transpose_apply(g),
            Layer::Relu => x.iter().zip(g).map(|(&xi, &gi)| relu_grad(xi) * gi).collect(),
            Layer::Softmax => {
                let gy: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                y.iter().zip(g).map(|(&yi, &gi)| yi * (gi - gy)).collect()
            }
        }
    }
}

/// An immutable stack of layers whose dimensions chain.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "NetRepr", into = "NetRepr"))]
pub struct FeedForwardNet {
    layers: Vec<Layer>,
    input_dim: usize,
    output_dim: usize,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct NetRepr {
    input_dim: usize,
    output_dim: usize,
    layers: Vec<Layer>,
}

#[cfg(feature = "serde")]
impl TryFrom<NetRepr> for FeedForwardNet {
    type Error = Error;

    fn try_from(r: NetRepr) -> Result<Self> {
        let net = FeedForwardNet::new(r.input_dim, r.layers)?;
        check_dim(r.output_dim, net.output_dim)?;
        Ok(net)
    }
}

#[cfg(feature = "serde")]
impl From<FeedForwardNet> for NetRepr {
    fn from(n: FeedForwardNet) -> Self {
        NetRepr {
            input_dim: n.input_dim,
            output_dim: n.output_dim,
            layers: n.layers,
        }
    }
}

impl FeedForwardNet {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidNet("input dimension must be positive".into()));
        }
        if layers.is_empty() {
            return Err(Error::InvalidNet("a network needs at least one layer".into()));
        }
        let mut dim = input_dim;
        for (k, layer) in layers.iter().enumerate() {
            if let Layer::Linear(l) = layer {
                l.validate()?;
                if l.in_dim != dim {
                    return Err(Error::InvalidNet(format!(
                        "layer {k} expects {} inputs but receives {dim}",
                        l.in_dim
                    )));
                }
            }
            dim = layer.out_dim(dim);
        }
        Ok(Self {
            layers,
            input_dim,
            output_dim: dim,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn ends_in_softmax(&self) -> bool {
        matches!(self.layers.last(), Some(Layer::Softmax))
    }

    /// True when every layer is linear or a rectifier, i.e. the network is a
    /// continuous piecewise-affine function of its input.
    pub fn is_piecewise_linear(&self) -> bool {
        !self.layers.iter().any(|l| matches!(l, Layer::Softmax))
    }

    /// Number of leading layers that compute the logits (everything but a
    /// final softmax).
    pub(crate) fn logit_depth(&self) -> usize {
        if self.ends_in_softmax() {
            self.layers.len() - 1
        } else {
            self.layers.len()
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim, x.len())?;
        Ok(self.forward_prefix(x, self.layers.len()))
    }

    /// Pre-softmax outputs. Identical to [`forward`](Self::forward) for nets
    /// without a softmax head.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim, x.len())?;
        Ok(self.forward_prefix(x, self.logit_depth()))
    }

    pub(crate) fn forward_prefix(&self, x: &[f64], depth: usize) -> Vec<f64> {
        let mut a = x.to_vec();
        for layer in &self.layers[..depth] {
            a = layer.forward(&a);
        }
        a
    }

    /// Activations after every layer; element 0 is the input itself.
    pub(crate) fn trace(&self, x: &[f64], depth: usize) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(depth + 1);
        acts.push(x.to_vec());
        for layer in &self.layers[..depth] {
            let next = layer.forward(acts.last().unwrap());
            acts.push(next);
        }
        acts
    }

    /// Scalar value of a resolved target at `x`.
    pub fn target_value(&self, x: &[f64], target: Target) -> Result<f64> {
        check_dim(self.input_dim, x.len())?;
        target.check(self)?;
        let (depth, seed) = target.seed(self);
        let out = self.forward_prefix(x, depth);
        Ok(out.iter().zip(&seed).map(|(a, b)| a * b).sum())
    }

    /// Gradient of the target with respect to the input, by reverse
    /// accumulation. The rectifier's derivative at exactly 0 is taken as 0.
    pub fn input_gradient(&self, x: &[f64], target: Target) -> Result<Vec<f64>> {
        check_dim(self.input_dim, x.len())?;
        target.check(self)?;
        let (depth, seed) = target.seed(self);
        let acts = self.trace(x, depth);
        let mut g = seed;
        for k in (0..depth).rev() {
            g = self.layers[k].backward(&acts[k], &acts[k + 1], &g);
        }
        Ok(g)
    }
}
