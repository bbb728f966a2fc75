//! Small statistics toolbox for the Monte Carlo experiments.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Point estimate with a two-sided confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    pub fn exact(v: f64) -> Self {
        Self { point: v, lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Standard deviation of the empirical mean of `n` Bernoulli(`p`) draws.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Hoeffding half-width for the mean of `n` samples in a range of width
/// `range`, at failure probability `delta`.
pub fn hoeffding_half_width(n: u64, delta: f64, range: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    range * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

pub fn hoeffding_interval(successes: u64, n: u64, delta: f64) -> Estimate {
    if n == 0 {
        return Estimate { point: 0.0, lo: 0.0, hi: 1.0 };
    }
    let p = successes as f64 / n as f64;
    let h = hoeffding_half_width(n, delta, 1.0);
    Estimate { point: p, lo: (p - h).max(0.0), hi: (p + h).min(1.0) }
}

/// p-value of Pearson's χ² goodness-of-fit test against the given
/// expected probabilities.
pub fn chi_square_pvalue(observed: &[u64], expected_probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected_probs.len());
    assert!(observed.len() >= 2);
    let n: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected_probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).expect("degrees of freedom > 0");
    dist.sf(stat)
}

pub fn chi_square_uniform_pvalue(observed: &[u64]) -> f64 {
    let p = 1.0 / observed.len() as f64;
    chi_square_pvalue(observed, &vec![p; observed.len()])
}

/// χ² independence test on an r×c contingency table.
pub fn chi_square_independence_pvalue(table: &[Vec<u64>]) -> f64 {
    let rows = table.len();
    let cols = table[0].len();
    let n: u64 = table.iter().flatten().sum();
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols).map(|c| table.iter().map(|r| r[c]).sum::<u64>() as f64).collect();
    let mut stat = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let e = row_sums[r] * col_sums[c] / n as f64;
            if e > 0.0 {
                stat += (table[r][c] as f64 - e).powi(2) / e;
            }
        }
    }
    let dist = ChiSquared::new(((rows - 1) * (cols - 1)) as f64).expect("degrees of freedom > 0");
    dist.sf(stat)
}

/// Empirical histogram over arbitrary outcomes.
#[derive(Debug, Clone)]
pub struct Histogram<K: Eq + Hash> {
    counts: HashMap<K, u64>,
    total: u64,
}

impl<K: Eq + Hash> Default for Histogram<K> {
    fn default() -> Self {
        Self { counts: HashMap::new(), total: 0 }
    }
}

impl<K: Eq + Hash + Clone> Histogram<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: K) {
        *self.counts.entry(key).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, key: &K) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    pub fn frequency(&self, key: &K) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(key) as f64 / self.total as f64
        }
    }

    /// Total variation distance between the two empirical distributions.
    pub fn tv_distance(&self, other: &Histogram<K>) -> f64 {
        let mut sum = 0.0;
        for (k, &c) in &self.counts {
            sum += (c as f64 / self.total as f64 - other.frequency(k)).abs();
        }
        for (k, &c) in &other.counts {
            if !self.counts.contains_key(k) {
                sum += c as f64 / other.total as f64;
            }
        }
        sum / 2.0
    }

    pub fn merge(&mut self, other: Histogram<K>) {
        for (k, c) in other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
        self.total += other.total;
    }
}
