use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::shapley::Game;
use crate::error::{Error, Result};
use crate::linalg::{weighted_least_squares, Matrix};
use crate::nn::{FeedForwardNet, Target};
use crate::seed;

/// Surrogate fitted by LIME.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Regularisation {
    /// Ordinary weighted least squares.
    #[default]
    None,
    /// L1-penalised least squares, `(1/2Σw) Σ w (y − β₀ − mᵀβ)² + λ‖β‖₁`.
    Lasso { lambda: f64 },
}

/// Largest feature count for exhaustive mask enumeration.
pub const LIME_ENUMERATION_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy)]
pub struct LimeOptions {
    pub n_samples: usize,
    pub kernel_width: Option<f64>,
    pub regularisation: Regularisation,
    pub exhaustive: bool,
}

const LASSO_TOL: f64 = 1e-12;
const LASSO_MAX_SWEEPS: usize = 10_000;

/// LIME with binary masks over features: a mask keeps `x` where it is 1 and
/// the baseline where it is 0. Samples are weighted by
/// `exp(−d²/width²)`, `d = ‖x − z‖/√n`; attributions are the surrogate's
/// coefficients. Random sampling needs at least `n + 2` masks.
pub fn lime_row(
    net: &FeedForwardNet,
    x: &[f64],
    baseline: &[f64],
    opts: LimeOptions,
    seed: u64,
    target: Target,
) -> Result<Vec<f64>> {
    let mut g = Game::new(net, x, baseline, target)?;
    let n = g.n();
    let masks: Vec<Vec<bool>> = if opts.exhaustive {
        if n > LIME_ENUMERATION_LIMIT {
            return Err(Error::TooManyFeatures {
                features: n,
                limit: LIME_ENUMERATION_LIMIT,
            });
        }
        (0..1u64 << n).map(|m| (0..n).map(|i| m >> i & 1 == 1).collect()).collect()
    } else {
        let mut rng = seed::rng(seed);
        (0..opts.n_samples)
            .map(|_| (0..n).map(|_| rng.random::<bool>()).collect())
            .collect()
    };
    if !opts.exhaustive && masks.len() < n + 2 {
        return Err(Error::UnderDetermined {
            samples: masks.len(),
            features: n,
        });
    }
    let sqrt_n = libm::sqrt(n as f64);
    let width = opts.kernel_width.unwrap_or(0.75 * sqrt_n);
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidConfig("LIME kernel width must be positive".into()));
    }
    let mut design = Matrix::zeros(masks.len(), n + 1);
    let mut y = Vec::with_capacity(masks.len());
    let mut w = Vec::with_capacity(masks.len());
    for (r, m) in masks.iter().enumerate() {
        y.push(g.value(|i| m[i]));
        let d2: f64 = (0..n)
            .filter(|&i| !m[i])
            .map(|i| (x[i] - baseline[i]) * (x[i] - baseline[i]))
            .sum::<f64>()
            / n as f64;
        w.push(libm::exp(-d2 / (width * width)));
        design.set(r, 0, 1.0);
        for i in 0..n {
            design.set(r, i + 1, f64::from(u8::from(m[i])));
        }
    }
    match opts.regularisation {
        Regularisation::None => {
            let beta = weighted_least_squares(&design, &y, &w)?;
            Ok(beta[1..].to_vec())
        }
        Regularisation::Lasso { lambda } => {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidConfig("lasso penalty must be nonnegative".into()));
            }
            Ok(weighted_lasso(&design, &y, &w, lambda, 1))
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Coordinate descent for the weighted lasso with an unpenalised intercept.
///
/// Columns before `skip` (the intercept) are removed by weighted centring;
/// the returned vector holds the remaining coefficients.
fn weighted_lasso(design: &Matrix, y: &[f64], w: &[f64], lambda: f64, skip: usize) -> Vec<f64> {
    let rows = design.rows();
    let p = design.cols() - skip;
    let wsum: f64 = w.iter().sum();
    let wn: Vec<f64> = w.iter().map(|v| v / wsum).collect();
    let mean = |col: &dyn Fn(usize) -> f64| (0..rows).map(|r| wn[r] * col(r)).sum::<f64>();
    let ymean = mean(&|r| y[r]);
    let xmean: Vec<f64> = (0..p).map(|j| mean(&|r| design.get(r, skip + j))).collect();
    let xc = |r: usize, j: usize| design.get(r, skip + j) - xmean[j];
    let norm: Vec<f64> = (0..p).map(|j| (0..rows).map(|r| wn[r] * xc(r, j) * xc(r, j)).sum()).collect();
    let mut resid: Vec<f64> = (0..rows).map(|r| y[r] - ymean).collect();
    let mut beta = vec![0.0; p];
    for _ in 0..LASSO_MAX_SWEEPS {
        let mut max_step: f64 = 0.0;
        for j in 0..p {
            if norm[j] == 0.0 {
                continue;
            }
            let rho: f64 = (0..rows).map(|r| wn[r] * xc(r, j) * resid[r]).sum::<f64>() + norm[j] * beta[j];
            let new = soft_threshold(rho, lambda) / norm[j];
            let step = new - beta[j];
            if step != 0.0 {
                for (r, res) in resid.iter_mut().enumerate() {
                    *res -= step * xc(r, j);
                }
                beta[j] = new;
            }
            max_step = max_step.max(step.abs());
        }
        if max_step < LASSO_TOL {
            break;
        }
    }
    beta
}
