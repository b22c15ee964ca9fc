mod common;

use attribench_core::attr::{AttributionMethod, AttributionMethodConfig};
use attribench_core::data::GroundTruth;
use attribench_core::forge::{build_model, FeatureKind, ModelFamily, ModelSpec};
use attribench_core::metrics::{infidelity_row, mask_error, mse, sensitivity_max};
use attribench_core::nn::{FeedForwardNet, Layer, Linear, Target};
use attribench_core::Matrix;
use common::*;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    Matrix::from_vec(rows, cols, random_point(rows * cols, seed, 3.0)).unwrap()
}

proptest! {
    #![proptest_config(cases(200))]

    #[test]
    fn mse_is_nonnegative_and_zero_only_on_equality(r in 1usize..5, c in 1usize..6, seed in any::<u64>(), bump in 0usize..30) {
        let a = matrix(r, c, seed);
        let gt = GroundTruth::Exact(a.clone());
        prop_assert_eq!(mse(&a, &gt).unwrap().mean, 0.0);
        let mut b = a.clone();
        let (i, j) = (bump % r, bump % c);
        b.set(i, j, b.get(i, j) + 0.5);
        let res = mse(&b, &gt).unwrap();
        prop_assert!(res.mean > 0.0);
        prop_assert!(res.scores.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn mask_error_ignores_relevant_features(r in 1usize..5, mask in prop::collection::vec(any::<bool>(), 1..7), seed in any::<u64>()) {
        let c = mask.len();
        let a = matrix(r, c, seed);
        let noise = matrix(r, c, seed ^ 1);
        let mut b = a.clone();
        for i in 0..r {
            for j in 0..c {
                if mask[j] {
                    b.set(i, j, noise.get(i, j));
                }
            }
        }
        let gt = GroundTruth::Mask(mask);
        prop_assert_eq!(mask_error(&a, &gt).unwrap(), mask_error(&b, &gt).unwrap());
    }

    #[test]
    fn sensitivity_is_nonnegative_and_zero_for_constant_methods(n in 1usize..6, seed in any::<u64>()) {
        let net = random_net(n, seed, None);
        let x = matrix(3, n, seed ^ 2);
        let cfg = AttributionMethodConfig::new(AttributionMethod::InputXGradient);
        let r = sensitivity_max(&cfg, &net, &x, 0.02, 5, seed).unwrap();
        prop_assert!(r.scores.iter().all(|&s| s >= 0.0));
        // a network with zero weights has constant (zero) attributions
        let flat = FeedForwardNet::new(n, vec![Layer::Linear(Linear::new(n, 1, vec![0.0; n], vec![0.7]).unwrap())]).unwrap();
        for m in [AttributionMethod::InputXGradient, AttributionMethod::kernel_shap(), AttributionMethod::DeepLift] {
            let r = sensitivity_max(&AttributionMethodConfig::new(m), &flat, &x, 0.02, 5, seed).unwrap();
            prop_assert_eq!(r.mean, 0.0);
        }
    }

    #[test]
    fn infidelity_of_gradient_on_linear_model_vanishes(n in 1usize..8, seed in any::<u64>(), noise in 0.01f64..3.0) {
        let w: Vec<f64> = random_point(n, seed, 2.0);
        let net = FeedForwardNet::new(n, vec![Layer::Linear(Linear::new(n, 1, w.clone(), vec![0.3]).unwrap())]).unwrap();
        let x = random_point(n, seed ^ 3, 2.0);
        let kinds = vec![FeatureKind::Continuous; n];
        let v = infidelity_row(&w, &net, &x, &vec![0.0; n], &kinds, noise, 32, seed, Target::Output(0)).unwrap();
        prop_assert!(v <= 1e-10 * (1.0 + noise * noise));
        let doubled: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
        let d = infidelity_row(&doubled, &net, &x, &vec![0.0; n], &kinds, noise, 32, seed, Target::Output(0)).unwrap();
        prop_assert!(d > 0.0 || w.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn linear_sensitivity_is_bounded_by_the_closed_form() {
    let w = vec![1.0, -2.0, 0.5];
    let net = build_model(&ModelSpec::new(ModelFamily::Weighted { weights: w.clone() })).unwrap();
    let x = Matrix::from_rows(&[[1.0, 2.0, -1.0]]).unwrap();
    let cfg = AttributionMethodConfig::new(AttributionMethod::InputXGradient);
    let r = 0.02;
    let score = sensitivity_max(&cfg, &net, &x, r, 50, 1).unwrap().mean;
    let xw: f64 = x.row(0).iter().zip(&w).map(|(a, b)| (a * b) * (a * b)).sum::<f64>().sqrt();
    let wn: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(score > 0.0 && score <= r * wn / xw + 1e-12);
}

#[test]
fn infidelity_discrete_perturbations() {
    // flipping ±1 inputs of a linear model: φ = gradient is still exact
    let w = vec![1.0, -1.0];
    let net = FeedForwardNet::new(2, vec![Layer::Linear(Linear::new(2, 1, w.clone(), vec![0.0]).unwrap())]).unwrap();
    let kinds = [FeatureKind::BooleanPm1, FeatureKind::Categorical01];
    let v = infidelity_row(&w, &net, &[1.0, 1.0], &[-1.0, 0.0], &kinds, 0.5, 64, 0, Target::Output(0)).unwrap();
    assert!(v < 1e-20);
    let zero = infidelity_row(&[0.0, 0.0], &net, &[1.0, 1.0], &[-1.0, 0.0], &kinds, 0.5, 64, 0, Target::Output(0)).unwrap();
    assert!(zero > 0.0);
}
