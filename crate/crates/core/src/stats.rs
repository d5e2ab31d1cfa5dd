//! Small statistics helpers for LOCO inference.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Sample sizes up to this use the exact null distribution.
const EXACT_MAX_N: usize = 30;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// Upper quantile z with P(Z <= z) = q.
pub fn normal_quantile(q: f64) -> f64 {
    Normal::standard().inverse_cdf(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedRankTest {
    /// Sum of ranks of positive differences (midranks for ties).
    pub w_plus: f64,
    /// Number of non-zero differences.
    pub n_used: usize,
    /// p-value against the alternative that differences tend to be positive.
    pub p_greater: f64,
    /// p-value against the alternative that differences tend to be negative.
    pub p_less: f64,
    pub exact: bool,
}

/// One-sample Wilcoxon signed-rank test of the differences against 0.
/// Zero differences are dropped.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> SignedRankTest {
    let mut nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return SignedRankTest {
            w_plus: 0.0,
            n_used: 0,
            p_greater: 1.0,
            p_less: 1.0,
            exact: true,
        };
    }
    nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    // doubled midranks stay integral
    let mut rank2 = vec![0u64; n];
    let mut tie_groups = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && nz[j + 1].abs() == nz[i].abs() {
            j += 1;
        }
        let r2 = (i + 1 + j + 1) as u64;
        for r in &mut rank2[i..=j] {
            *r = r2;
        }
        tie_groups.push(j - i + 1);
        i = j + 1;
    }
    let w2: u64 = nz.iter().zip(&rank2).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    if n <= EXACT_MAX_N {
        // distribution of the doubled statistic under random signs
        let max = rank2.iter().sum::<u64>() as usize;
        let mut dist = vec![0.0f64; max + 1];
        dist[0] = 1.0;
        let mut reach = 0usize;
        for &r in &rank2 {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if dist[s] != 0.0 {
                    dist[s + r] += dist[s];
                }
            }
            reach += r;
        }
        let total = 2f64.powi(n as i32);
        let w2 = w2 as usize;
        let upper: f64 = dist[w2..].iter().sum();
        let lower: f64 = dist[..=w2].iter().sum();
        return SignedRankTest {
            w_plus: w2 as f64 / 2.0,
            n_used: n,
            p_greater: (upper / total).min(1.0),
            p_less: (lower / total).min(1.0),
            exact: true,
        };
    }

    let nf = n as f64;
    let w = w2 as f64 / 2.0;
    let mu = nf * (nf + 1.0) / 4.0;
    let tie_adj: f64 = tie_groups.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let sigma = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_adj).sqrt();
    let std = Normal::standard();
    SignedRankTest {
        w_plus: w,
        n_used: n,
        p_greater: 1.0 - std.cdf((w - mu - 0.5) / sigma),
        p_less: std.cdf((w - mu + 0.5) / sigma),
        exact: false,
    }
}
