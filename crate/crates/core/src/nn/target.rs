use alloc::vec;
use alloc::vec::Vec;

use super::FeedForwardNet;
use crate::error::{Error, Result};

/// Which class an index-based target refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ClassSelector {
    Index(usize),
    /// The arg-max class of the network at the explained input.
    Predicted,
}

/// The scalar output an attribution explains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", content = "class", rename_all = "snake_case"))]
pub enum TargetSpec {
    /// The single output of a regression network.
    #[default]
    Scalar,
    /// One coordinate of the network output (a softmax probability for
    /// classifiers).
    ClassProbability(ClassSelector),
    /// One pre-softmax logit.
    Logit(ClassSelector),
    /// A logit minus the mean of all logits.
    LogitNormalised(ClassSelector),
}

/// A target with its class index fixed for one explained input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Output(usize),
    Logit(usize),
    LogitNormalised(usize),
}

impl TargetSpec {
    pub fn resolve(&self, net: &FeedForwardNet, x: &[f64]) -> Result<Target> {
        let pick = |sel: &ClassSelector| -> Result<usize> {
            match *sel {
                ClassSelector::Index(i) => Ok(i),
                ClassSelector::Predicted => {
                    let y = net.forward(x)?;
                    Ok(argmax(&y))
                }
            }
        };
        let t = match self {
            TargetSpec::Scalar => {
                if net.output_dim() != 1 {
                    return Err(Error::InvalidTarget(alloc::format!(
                        "scalar target on a network with {} outputs",
                        net.output_dim()
                    )));
                }
                Target::Output(0)
            }
            TargetSpec::ClassProbability(s) => Target::Output(pick(s)?),
            TargetSpec::Logit(s) => Target::Logit(pick(s)?),
            TargetSpec::LogitNormalised(s) => Target::LogitNormalised(pick(s)?),
        };
        t.check(net)?;
        Ok(t)
    }

    pub fn name(&self) -> &'static str {
        match self {
            TargetSpec::Scalar => "scalar",
            TargetSpec::ClassProbability(_) => "class_probability",
            TargetSpec::Logit(_) => "logit",
            TargetSpec::LogitNormalised(_) => "logit_normalised",
        }
    }
}

impl Target {
    pub fn index(&self) -> usize {
        match *self {
            Target::Output(i) | Target::Logit(i) | Target::LogitNormalised(i) => i,
        }
    }

    pub fn is_logit(&self) -> bool {
        !matches!(self, Target::Output(_))
    }

    pub(crate) fn check(&self, net: &FeedForwardNet) -> Result<()> {
        if self.is_logit() && !net.ends_in_softmax() {
            return Err(Error::InvalidTarget(
                "logit targets need a network ending in softmax".into(),
            ));
        }
        let outputs = net.output_dim();
        if self.index() >= outputs {
            return Err(Error::TargetOutOfRange {
                index: self.index(),
                outputs,
            });
        }
        Ok(())
    }

    /// Number of leading layers the target reads from, and the linear
    /// functional applied to their output.
    pub(crate) fn seed(&self, net: &FeedForwardNet) -> (usize, Vec<f64>) {
        let k = net.output_dim();
        match *self {
            Target::Output(c) => (net.layers().len(), one_hot(k, c)),
            Target::Logit(c) => (net.logit_depth(), one_hot(k, c)),
            Target::LogitNormalised(c) => {
                let mut s = vec![-1.0 / k as f64; k];
                s[c] += 1.0;
                (net.logit_depth(), s)
            }
        }
    }
}

fn one_hot(k: usize, c: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[c] = 1.0;
    v
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}
