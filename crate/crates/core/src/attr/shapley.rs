use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::{binomial, weighted_least_squares, Matrix};
use crate::nn::{FeedForwardNet, Target};
use crate::seed;

/// Largest feature count for [`exact_shapley`].
pub const EXACT_SHAPLEY_LIMIT: usize = 12;
/// Largest feature count for exhaustive permutation sampling (n! orderings).
pub const EXHAUSTIVE_PERMUTATION_LIMIT: usize = 9;
/// KernelSHAP enumerates every coalition up to this many features.
pub const KERNEL_SHAP_ENUMERATION_LIMIT: usize = 12;

/// Cooperative game whose players are features: a coalition keeps its
/// features at `x`, the rest sit at the baseline.
pub(crate) struct Game<'a> {
    net: &'a FeedForwardNet,
    x: &'a [f64],
    b: &'a [f64],
    depth: usize,
    seed: Vec<f64>,
    z: Vec<f64>,
}

impl<'a> Game<'a> {
    pub(crate) fn new(net: &'a FeedForwardNet, x: &'a [f64], b: &'a [f64], target: Target) -> Result<Self> {
        net.target_value(x, target)?;
        let (depth, seed) = target.seed(net);
        Ok(Self {
            net,
            x,
            b,
            depth,
            seed,
            z: b.to_vec(),
        })
    }

    pub(crate) fn n(&self) -> usize {
        self.x.len()
    }

    /// Value of the target at the current composite point.
    fn current(&self) -> f64 {
        let out = self.net.forward_prefix(&self.z, self.depth);
        out.iter().zip(&self.seed).map(|(a, b)| a * b).sum()
    }

    fn set(&mut self, i: usize, present: bool) {
        self.z[i] = if present { self.x[i] } else { self.b[i] };
    }

    pub(crate) fn value(&mut self, keep: impl Fn(usize) -> bool) -> f64 {
        for i in 0..self.n() {
            let p = keep(i);
            self.set(i, p);
        }
        self.current()
    }

    /// Value of a coalition given as a bit mask (bit `i` = feature `i`).
    fn value_bits(&mut self, mask: u64) -> f64 {
        self.value(|i| mask >> i & 1 == 1)
    }

    /// Adds marginal contributions along one ordering to `acc`.
    fn walk(&mut self, order: &[usize], v_empty: f64, acc: &mut [f64]) {
        self.z.copy_from_slice(self.b);
        let mut prev = v_empty;
        for &i in order {
            self.set(i, true);
            let v = self.current();
            acc[i] += v - prev;
            prev = v;
        }
    }
}

/// `f(x) − f(x with feature i at its baseline)` for every `i`.
pub fn feature_ablation_row(net: &FeedForwardNet, x: &[f64], baseline: &[f64], target: Target) -> Result<Vec<f64>> {
    let mut g = Game::new(net, x, baseline, target)?;
    let full = g.value(|_| true);
    Ok((0..x.len())
        .map(|i| full - g.value(|j| j != i))
        .collect())
}

/// Permutation-sampling Shapley estimate.
///
/// Orderings are drawn in antithetic pairs (an ordering followed by its
/// reverse), which keeps the estimator unbiased and reduces its variance.
/// With `exhaustive` every one of the n! orderings is used once.
pub fn shapley_value_sampling_row(
    net: &FeedForwardNet,
    x: &[f64],
    baseline: &[f64],
    n_permutations: usize,
    exhaustive: bool,
    seed: u64,
    target: Target,
) -> Result<Vec<f64>> {
    let mut g = Game::new(net, x, baseline, target)?;
    let n = g.n();
    let v_empty = g.value(|_| false);
    let mut acc = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let count;
    if exhaustive {
        if n > EXHAUSTIVE_PERMUTATION_LIMIT {
            return Err(Error::TooManyFeatures {
                features: n,
                limit: EXHAUSTIVE_PERMUTATION_LIMIT,
            });
        }
        let mut c = 0usize;
        loop {
            g.walk(&order, v_empty, &mut acc);
            c += 1;
            if !next_permutation(&mut order) {
                break;
            }
        }
        count = c;
    } else {
        if n_permutations == 0 {
            return Err(Error::InvalidConfig("n_permutations must be at least 1".into()));
        }
        let mut rng = seed::rng(seed);
        for p in 0..n_permutations {
            if p % 2 == 0 {
                order.shuffle(&mut rng);
            } else {
                order.reverse();
            }
            g.walk(&order, v_empty, &mut acc);
        }
        count = n_permutations;
    }
    Ok(acc.into_iter().map(|a| a / count as f64).collect())
}

/// Lexicographic successor; false once the last ordering is reached.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Shapley values by enumerating all 2ⁿ coalitions.
pub fn exact_shapley(net: &FeedForwardNet, x: &[f64], baseline: &[f64], target: Target) -> Result<Vec<f64>> {
    let n = x.len();
    if n > EXACT_SHAPLEY_LIMIT {
        return Err(Error::TooManyFeatures {
            features: n,
            limit: EXACT_SHAPLEY_LIMIT,
        });
    }
    let mut g = Game::new(net, x, baseline, target)?;
    let values: Vec<f64> = (0..1u64 << n).map(|m| g.value_bits(m)).collect();
    // weight of a coalition of size s not containing i: s!(n−s−1)!/n!
    let weight: Vec<f64> = (0..n).map(|s| 1.0 / (n as f64 * binomial(n - 1, s))).collect();
    let mut phi = vec![0.0; n];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1u64 << i;
        for m in 0..1u64 << n {
            if m & bit == 0 {
                *p += weight[m.count_ones() as usize] * (values[(m | bit) as usize] - values[m as usize]);
            }
        }
    }
    Ok(phi)
}

/// Shapley kernel `π(s) = (n−1) / (C(n,s)·s·(n−s))`.
fn shapley_kernel(n: usize, s: usize) -> f64 {
    (n - 1) as f64 / (binomial(n, s) * s as f64 * (n - s) as f64)
}

/// KernelSHAP: Shapley-kernel weighted regression on coalition indicators.
///
/// The empty and full coalitions enter as the constraint
/// `Σφ = f(x) − f(baseline)`, eliminated through the last coefficient. All
/// proper coalitions are used when `n ≤ 12`; otherwise `budget` coalitions
/// are sampled with size probability proportional to the kernel mass of
/// that size and uniform membership, each then carrying equal weight.
pub fn kernel_shap_row(
    net: &FeedForwardNet,
    x: &[f64],
    baseline: &[f64],
    budget: usize,
    seed: u64,
    target: Target,
) -> Result<Vec<f64>> {
    let mut g = Game::new(net, x, baseline, target)?;
    let n = g.n();
    let v0 = g.value(|_| false);
    let delta = g.value(|_| true) - v0;
    if n == 1 {
        return Ok(vec![delta]);
    }
    let mut coalitions: Vec<Vec<bool>> = Vec::new();
    let mut weights = Vec::new();
    if n <= KERNEL_SHAP_ENUMERATION_LIMIT {
        for m in 1..(1u64 << n) - 1 {
            let s = m.count_ones() as usize;
            coalitions.push((0..n).map(|i| m >> i & 1 == 1).collect());
            weights.push(shapley_kernel(n, s));
        }
    } else {
        if budget == 0 {
            return Err(Error::InvalidConfig("KernelSHAP budget must be at least 1".into()));
        }
        let mut rng = seed::rng(seed);
        let size_mass: Vec<f64> = (1..n).map(|s| (n - 1) as f64 / (s * (n - s)) as f64).collect();
        let sizes = WeightedIndex::new(&size_mass).map_err(|_| Error::DegenerateSampling)?;
        for _ in 0..budget {
            let s = sizes.sample(&mut rng) + 1;
            let mut c = vec![false; n];
            for i in rand::seq::index::sample(&mut rng, n, s) {
                c[i] = true;
            }
            coalitions.push(c);
            weights.push(1.0);
        }
    }
    let p = n - 1;
    let mut design = Matrix::zeros(coalitions.len(), p);
    let mut y = Vec::with_capacity(coalitions.len());
    for (r, c) in coalitions.iter().enumerate() {
        let v = g.value(|i| c[i]);
        let last = f64::from(u8::from(c[p]));
        for j in 0..p {
            design.set(r, j, f64::from(u8::from(c[j])) - last);
        }
        y.push(v - v0 - last * delta);
    }
    let mut phi = weighted_least_squares(&design, &y, &weights)?;
    let rest: f64 = phi.iter().sum();
    phi.push(delta - rest);
    Ok(phi)
}
