//! Quicksort comparison-count ground truth: exact cost of a given
//! permutation, brute-force distributions for small n, the exact mean
//! recurrence, and seeded Monte Carlo summaries of the normalized cost
//! (X_n − E X_n)/n.
//!
//! Cost model: comparisons only, pivot = first element, left-to-right
//! partition comparing the pivot against each of the other k−1 elements of a
//! length-k sublist, recursing on both sides. "Number of steps" is read as
//! this comparison count — the model under which the classical mean recurrence
//! E X_n = (n−1) + (2/n)·Σ_{k<n} E X_k holds.
//!
//! RNG: ChaCha8 (rand_chacha), seeded explicitly. `simulate` shards samples in
//! fixed-size blocks, each block seeded deterministically from (seed, shard
//! index), so results are bit-reproducible regardless of worker count.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("not a permutation of 1..={0}: duplicate or out-of-range entry")]
    InvalidPermutation(usize),
    #[error("exact enumeration limited to n <= 10, got {0}")]
    TooLarge(usize),
}

/// Exact probability as a ratio of u128 counts (denominator n!).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: u128,
    pub den: u128,
}

impl Rational {
    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionKind {
    Exact,
    Empirical,
}

/// Distribution of the comparison count X_n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostDistribution {
    pub n: usize,
    /// comparison count -> probability. Exact kind stores n!-denominator
    /// rationals; empirical kind stores sample frequencies (num/den).
    pub support: BTreeMap<u64, Rational>,
    pub kind: DistributionKind,
}

impl CostDistribution {
    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .map(|(&cost, p)| cost as f64 * p.as_f64())
            .sum()
    }

    pub fn total_probability(&self) -> f64 {
        self.support.values().map(Rational::as_f64).sum()
    }
}

/// Monte Carlo summary of the normalized cost y = (X_n − E X_n)/n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimSummary {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub exact_mean: f64,
    pub empirical_mean: f64,
    /// Variance of y (population form, divisor = samples).
    pub empirical_variance: f64,
    /// Empirical characteristic function on the fixed grid t = 0, 0.5, …, 10.
    pub ecf: Vec<(f64, Complex64)>,
    /// Normalized costs, kept for CDF comparisons downstream.
    #[serde(skip)]
    pub normalized: Vec<f64>,
}

/// The fixed ecf evaluation grid.
pub fn ecf_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 * 0.5).collect()
}

/// Comparison count of classic quicksort on `perm` (entries 1..=n).
/// Deterministic; recursion is managed with an explicit stack so adversarial
/// (already sorted) inputs of any size cannot overflow the call stack.
pub fn quicksort_cost(perm: &[u32]) -> Result<u64, SimError> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &v in perm {
        let v = v as usize;
        if v == 0 || v > n || seen[v - 1] {
            return Err(SimError::InvalidPermutation(n));
        }
        seen[v - 1] = true;
    }
    let mut buf: Vec<u32> = perm.to_vec();
    Ok(quicksort_cost_unchecked(&mut buf))
}

/// Cost on a scratch buffer assumed to hold distinct keys. Sorts in place.
pub(crate) fn quicksort_cost_unchecked(buf: &mut [u32]) -> u64 {
    let mut cost = 0u64;
    let mut stack: Vec<(usize, usize)> = vec![(0, buf.len())];
    while let Some((lo, hi)) = stack.pop() {
        let len = hi - lo;
        if len < 2 {
            continue;
        }
        cost += (len - 1) as u64;
        // Partition around buf[lo], left-to-right.
        let pivot = buf[lo];
        let mut store = lo;
        for i in lo + 1..hi {
            if buf[i] < pivot {
                store += 1;
                buf.swap(store, i);
            }
        }
        buf.swap(lo, store);
        stack.push((lo, store));
        stack.push((store + 1, hi));
    }
    cost
}

/// Brute-force cost distribution over all n! permutations, exact rationals.
pub fn exact_distribution(n: usize) -> Result<CostDistribution, SimError> {
    if n > 10 {
        return Err(SimError::TooLarge(n));
    }
    let mut support: BTreeMap<u64, u128> = BTreeMap::new();
    if n == 0 {
        support.insert(0, 1);
    } else {
        // Heap's algorithm over 1..=n.
        let mut perm: Vec<u32> = (1..=n as u32).collect();
        let mut scratch = perm.clone();
        let mut c = vec![0usize; n];
        scratch.copy_from_slice(&perm);
        *support.entry(quicksort_cost_unchecked(&mut scratch)).or_insert(0) += 1;
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                scratch.copy_from_slice(&perm);
                *support.entry(quicksort_cost_unchecked(&mut scratch)).or_insert(0) += 1;
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
    }
    let den: u128 = (1..=n as u128).product::<u128>().max(1);
    let support = support
        .into_iter()
        .map(|(cost, count)| (cost, Rational { num: count, den }))
        .collect();
    Ok(CostDistribution {
        n,
        support,
        kind: DistributionKind::Exact,
    })
}

/// E X_n from the recurrence E X_0 = 0, E X_n = (n−1) + (2/n)·Σ_{k<n} E X_k,
/// with Kahan summation of the prefix sums.
pub fn exact_mean(n: usize) -> f64 {
    let mut means = Vec::with_capacity(n + 1);
    means.push(0.0f64);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64; // Kahan compensation
    for k in 1..=n {
        let prev = means[k - 1];
        let y = prev - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        means.push((k as f64 - 1.0) + 2.0 * sum / k as f64);
    }
    means[n]
}

/// Samples per shard; fixed so the stream of permutations depends only on
/// (seed, shard index), never on worker count.
const SHARD: usize = 4096;

/// Seeded Monte Carlo run: `samples` uniform permutations of size n via
/// Fisher–Yates, normalized costs, moments, and the ecf on the fixed grid.
pub fn simulate(n: usize, samples: usize, seed: u64) -> SimSummary {
    assert!(n >= 2, "simulate requires n >= 2");
    assert!(samples >= 1000, "simulate requires at least 1000 samples");
    let mean_n = exact_mean(n);
    let shards: Vec<(usize, usize)> = (0..samples.div_ceil(SHARD))
        .map(|s| (s, (samples - s * SHARD).min(SHARD)))
        .collect();
    let mut normalized: Vec<f64> = shards
        .par_iter()
        .flat_map_iter(|&(shard, count)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (shard as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut perm: Vec<u32> = (1..=n as u32).collect();
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                // Fisher–Yates, explicit so the permutation stream is pinned
                // to this implementation rather than a library shuffle.
                for i in (1..n).rev() {
                    let j = rng.random_range(0..=i);
                    perm.swap(i, j);
                }
                let cost = quicksort_cost_unchecked(&mut perm);
                out.push((cost as f64 - mean_n) / n as f64);
            }
            out
        })
        .collect();
    normalized.truncate(samples);

    let m = samples as f64;
    let empirical_mean = normalized.iter().sum::<f64>() / m;
    let empirical_variance = normalized
        .iter()
        .map(|y| (y - empirical_mean).powi(2))
        .sum::<f64>()
        / m;
    let ecf = ecf_grid()
        .into_iter()
        .map(|t| {
            let v: Complex64 = normalized
                .iter()
                .map(|&y| Complex64::new(0.0, t * y).exp())
                .sum::<Complex64>()
                / m;
            (t, v)
        })
        .collect();
    SimSummary {
        n,
        samples,
        seed,
        exact_mean: mean_n,
        empirical_mean,
        empirical_variance,
        ecf,
        normalized,
    }
}
