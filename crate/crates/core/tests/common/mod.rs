#![allow(dead_code)]

use attribench_core::data::DatasetSpec;
use attribench_core::forge::{Connective, Family, ModelSpec};
use attribench_core::nn::{FeedForwardNet, Layer, Linear};
use attribench_core::seed;
use proptest::prelude::*;
use rand::Rng;

/// Random rectifier net: `n` inputs, up to two hidden layers, one output,
/// weights uniform in (−1, 1).
pub fn random_net(n: usize, seed: u64, softmax_classes: Option<usize>) -> FeedForwardNet {
    let mut rng = seed::rng(seed);
    let depth = rng.random_range(1..=2);
    let mut layers = Vec::new();
    let mut dim = n;
    for _ in 0..depth {
        let width = rng.random_range(2..=6);
        layers.push(Layer::Linear(random_linear(&mut rng, dim, width)));
        layers.push(Layer::Relu);
        dim = width;
    }
    let out = softmax_classes.unwrap_or(1);
    layers.push(Layer::Linear(random_linear(&mut rng, dim, out)));
    if softmax_classes.is_some() {
        layers.push(Layer::Softmax);
    }
    FeedForwardNet::new(n, layers).unwrap()
}

fn random_linear(rng: &mut impl Rng, input: usize, output: usize) -> Linear {
    let w = (0..input * output).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = (0..output).map(|_| rng.random_range(-0.5..0.5)).collect();
    Linear::new(input, output, w, b).unwrap()
}

pub fn random_point(n: usize, seed: u64, scale: f64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Spec of a handcrafted family with drawn weights.
pub fn family_spec(family: Family, n: usize, seed: u64) -> ModelSpec {
    let ds = match family {
        Family::Boolean => DatasetSpec::boolean_unit(
            if seed.is_multiple_of(2) { Connective::And } else { Connective::Or },
            n,
        ),
        Family::Interacting | Family::Uncertainty => DatasetSpec {
            family,
            n_features: n.max(2),
            ..DatasetSpec::default()
        },
        _ => DatasetSpec {
            family,
            n_features: n,
            ..DatasetSpec::default()
        },
    };
    ds.with_seed(seed).draw_model().unwrap()
}

pub fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

/// Random Boolean formula text over atoms `a0 … a{atoms−1}`.
pub fn formula(atoms: usize) -> impl Strategy<Value = String> {
    let leaf = (0..atoms).prop_map(|i| format!("a{i}"));
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| format!("NOT {e}")),
            prop::collection::vec(inner.clone(), 2..4).prop_map(|v| format!("({})", v.join(" AND "))),
            prop::collection::vec(inner, 2..4).prop_map(|v| format!("({})", v.join(" OR "))),
        ]
    })
}

/// Proptest configuration without on-disk regression files.
pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}
