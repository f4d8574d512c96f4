//! Rank tests for comparing ruin-probability tables: the Wilcoxon
//! signed-rank test for paired curves and the Friedman test across several
//! curves evaluated on the same surplus grid.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::dependence::average_ranks;
use crate::dist_fit::chi_square_upper_tail;

#[derive(Debug, Error, PartialEq)]
pub enum TestError {
    #[error("samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} {what}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("every paired difference is zero")]
    AllZeroDifferences,
    #[error("every block is constant; no ranking information")]
    Degenerate,
    #[error("rows have unequal lengths")]
    Ragged,
    #[error("non-finite observation")]
    NonFinite,
    #[error("exact Friedman distribution needs b*k <= 20 and k <= 6 (b = {blocks}, k = {groups})")]
    ExactTooLarge { blocks: usize, groups: usize },
}

/// Rank statistics of one group (sign class or column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankGroup {
    pub label: String,
    pub count: usize,
    pub mean_rank: f64,
    pub rank_sum: f64,
    pub median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    /// Normal-approximation score, when one is used.
    pub z_value: Option<f64>,
    pub dof: Option<u32>,
    pub p_value: f64,
    pub n_effective: usize,
    pub ranks_summary: Vec<RankGroup>,
}

// Folding from +0.0 keeps an empty sum from printing as -0.
fn group(label: &str, ranks: &[f64], median: Option<f64>) -> RankGroup {
    let rank_sum: f64 = ranks.iter().fold(0.0, |a, b| a + b);
    RankGroup {
        label: label.to_string(),
        count: ranks.len(),
        mean_rank: if ranks.is_empty() {
            0.0
        } else {
            rank_sum / ranks.len() as f64
        },
        rank_sum,
        median,
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Two-sided Wilcoxon signed-rank test on `x - y`.
///
/// Zero differences are dropped, tied absolute differences get mid-ranks, and
/// `T = min(T-, T+)` is referred to the normal approximation
/// `z = (T - n(n+1)/4) / sqrt(n(n+1)(2n+1)/24)` without continuity correction.
/// `ranks_summary` holds the negative then the positive ranks.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<TestResult, TestError> {
    if x.len() != y.len() {
        return Err(TestError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 5 {
        return Err(TestError::InsufficientData {
            what: "pairs",
            needed: 5,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(TestError::NonFinite);
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(TestError::AllZeroDifferences);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let (mut neg, mut pos) = (Vec::new(), Vec::new());
    for (d, r) in diffs.iter().zip(&ranks) {
        if *d < 0.0 {
            neg.push(*r);
        } else {
            pos.push(*r);
        }
    }
    let t_minus: f64 = neg.iter().fold(0.0, |a, b| a + b);
    let t_plus: f64 = pos.iter().fold(0.0, |a, b| a + b);
    let t = t_minus.min(t_plus);
    let n = diffs.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let sd = (n * (n + 1.0) * (2.0 * n + 1.0) / 24.0).sqrt();
    let z = (t - mean) / sd;
    let p = (2.0 * Normal::standard().cdf(-z.abs())).min(1.0);
    Ok(TestResult {
        statistic: t,
        z_value: Some(z),
        dof: None,
        p_value: p,
        n_effective: diffs.len(),
        ranks_summary: vec![group("negative", &neg, None), group("positive", &pos, None)],
    })
}

fn check_blocks(blocks: &[Vec<f64>]) -> Result<(usize, usize), TestError> {
    let b = blocks.len();
    if b < 2 {
        return Err(TestError::InsufficientData {
            what: "blocks",
            needed: 2,
            got: b,
        });
    }
    let k = blocks[0].len();
    if blocks.iter().any(|r| r.len() != k) {
        return Err(TestError::Ragged);
    }
    if k < 2 {
        return Err(TestError::InsufficientData {
            what: "groups",
            needed: 2,
            got: k,
        });
    }
    if blocks.iter().flatten().any(|v| !v.is_finite()) {
        return Err(TestError::NonFinite);
    }
    if blocks.iter().all(|r| r.iter().all(|&v| v == r[0])) {
        return Err(TestError::Degenerate);
    }
    Ok((b, k))
}

fn friedman_from_rank_sums(rank_sums: &[f64], b: usize) -> f64 {
    let k = rank_sums.len() as f64;
    let b = b as f64;
    let centre = b * (k + 1.0) / 2.0;
    12.0 / (b * k * (k + 1.0)) * rank_sums.iter().map(|r| (r - centre).powi(2)).sum::<f64>()
}

/// Friedman rank test over `b` blocks (rows) of `k` groups (columns).
///
/// Ranks are assigned within each row (mid-ranks for ties) and
/// `chi2_r = 12 / (b k (k+1)) * sum_j (R_j - b(k+1)/2)^2` is referred to
/// chi-square with `k - 1` degrees of freedom. `ranks_summary` carries one
/// entry per column, labelled by column index, with the column median.
pub fn friedman(blocks: &[Vec<f64>]) -> Result<TestResult, TestError> {
    let (b, k) = check_blocks(blocks)?;
    let mut rank_sums = vec![0.0; k];
    for row in blocks {
        for (j, r) in average_ranks(row).into_iter().enumerate() {
            rank_sums[j] += r;
        }
    }
    let statistic = friedman_from_rank_sums(&rank_sums, b);
    let dof = (k - 1) as u32;
    let p_value = chi_square_upper_tail(statistic, dof).expect("dof >= 1 and statistic >= 0");
    let ranks_summary = (0..k)
        .map(|j| {
            let col: Vec<f64> = blocks.iter().map(|r| r[j]).collect();
            RankGroup {
                label: j.to_string(),
                count: b,
                mean_rank: rank_sums[j] / b as f64,
                rank_sum: rank_sums[j],
                median: median(&col),
            }
        })
        .collect();
    Ok(TestResult {
        statistic,
        z_value: None,
        dof: Some(dof),
        p_value,
        n_effective: b,
        ranks_summary,
    })
}

fn permutations(k: usize) -> Vec<Vec<u32>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k as u32);
            out.push(q);
        }
    }
    out
}

/// Exact permutation p-value of the Friedman statistic, for small designs.
///
/// Under the null every within-row ranking is equally likely; the
/// distribution of the column rank-sum vector is built block by block.
pub fn friedman_exact_p(blocks: &[Vec<f64>]) -> Result<f64, TestError> {
    let (b, k) = check_blocks(blocks)?;
    if b * k > 20 || k > 6 {
        return Err(TestError::ExactTooLarge {
            blocks: b,
            groups: k,
        });
    }
    let observed = friedman(blocks)?.statistic;
    let perms = permutations(k);
    let mut dist: HashMap<Vec<u32>, u64> = HashMap::from([(vec![0; k], 1)]);
    for _ in 0..b {
        let mut next: HashMap<Vec<u32>, u64> = HashMap::with_capacity(dist.len() * perms.len());
        for (sums, count) in &dist {
            for p in &perms {
                let key: Vec<u32> = sums.iter().zip(p).map(|(s, r)| s + r).collect();
                *next.entry(key).or_default() += count;
            }
        }
        dist = next;
    }
    let total = (perms.len() as f64).powi(b as i32);
    let tail: u64 = dist
        .iter()
        .filter(|(sums, _)| {
            let sums: Vec<f64> = sums.iter().map(|&s| f64::from(s)).collect();
            friedman_from_rank_sums(&sums, b) >= observed - 1e-9
        })
        .map(|(_, c)| c)
        .sum();
    Ok(tail as f64 / total)
}
