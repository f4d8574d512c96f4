//! Dependence between monthly claim counts and claim sizes: correlation
//! measures, the Gumbel copula, and a rank-based independence test.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::rng::substream;

#[derive(Debug, Error, PartialEq)]
pub enum DependenceError {
    #[error("samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} pairs, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("a sample is constant")]
    Constant,
    #[error("copula parameter must be >= 1, got {0}")]
    InvalidTheta(f64),
    #[error("copula argument {0} outside [0, 1]")]
    OutOfUnitInterval(f64),
    #[error("Kendall's tau is 1; the Gumbel parameter is unbounded")]
    PerfectConcordance,
    #[error("bootstrap needs at least 200 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("non-finite observation")]
    NonFinite,
}

/// Dependence summary for one product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub kendall_tau: f64,
    /// Gumbel parameter from tau inversion, clamped at 1.
    pub gumbel_theta: f64,
    /// Cramér–von Mises distance to the independence copula (large means dependent).
    pub cvm_statistic: f64,
    pub independence_p: f64,
    pub warnings: Vec<String>,
}

fn check_pairs(x: &[f64], y: &[f64], min: usize) -> Result<(), DependenceError> {
    if x.len() != y.len() {
        return Err(DependenceError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < min {
        return Err(DependenceError::InsufficientData {
            needed: min,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(DependenceError::NonFinite);
    }
    Ok(())
}

/// Sample Pearson correlation with its two-sided p-value from Student's t
/// on `n - 2` degrees of freedom.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<(f64, f64), DependenceError> {
    check_pairs(x, y, 3)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(DependenceError::Constant);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = n - 2.0;
    let p = if (1.0 - r * r) <= f64::EPSILON {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
    };
    Ok((r, p))
}

/// Tie-corrected Kendall tau-b in `O(n log n)` (Knight's algorithm).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64, DependenceError> {
    check_pairs(x, y, 3)?;
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |run: u64| run * (run.saturating_sub(1)) / 2;

    // Ties in x, and joint ties in (x, y).
    let (mut tied_x, mut tied_xy) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                tied_xy += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            tied_x += pairs(run_x);
            tied_xy += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tied_x += pairs(run_x);
    tied_xy += pairs(run_xy);

    // Discordant pairs are the inversions of y in this order.
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut tied_y = 0u64;
    let mut run_y = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            tied_y += pairs(run_y);
            run_y = 1;
        }
    }
    tied_y += pairs(run_y);

    let total = pairs(n as u64);
    let num = total as f64 - tied_x as f64 - tied_y as f64 + tied_xy as f64 - 2.0 * swaps as f64;
    let denom = ((total - tied_x) as f64 * (total - tied_y) as f64).sqrt();
    if denom == 0.0 {
        return Err(DependenceError::Constant);
    }
    Ok((num / denom).clamp(-1.0, 1.0))
}

/// Merge sort counting strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Gumbel copula `exp(-[(-ln z)^θ + (-ln k)^θ]^(1/θ))`.
pub fn gumbel_cdf(z: f64, k: f64, theta: f64) -> Result<f64, DependenceError> {
    if !(theta >= 1.0) {
        return Err(DependenceError::InvalidTheta(theta));
    }
    for a in [z, k] {
        if !(0.0..=1.0).contains(&a) {
            return Err(DependenceError::OutOfUnitInterval(a));
        }
    }
    if z == 0.0 || k == 0.0 {
        return Ok(0.0);
    }
    if z == 1.0 {
        return Ok(k);
    }
    if k == 1.0 {
        return Ok(z);
    }
    let s = (-z.ln()).powf(theta) + (-k.ln()).powf(theta);
    Ok((-s.powf(1.0 / theta)).exp())
}

/// Gumbel parameter from Kendall's tau, `θ = 1 / (1 - τ)`, clamped at 1
/// for non-positive tau.
pub fn gumbel_theta_from_tau(tau: f64) -> Result<f64, DependenceError> {
    if tau >= 1.0 {
        return Err(DependenceError::PerfectConcordance);
    }
    Ok(1.0 / (1.0 - tau.max(0.0)))
}

pub fn fit_gumbel_theta(x: &[f64], y: &[f64]) -> Result<f64, DependenceError> {
    gumbel_theta_from_tau(kendall_tau(x, y)?)
}

/// Positive stable variate with Laplace transform `exp(-s^alpha)`,
/// `0 < alpha <= 1`, by Kanter's representation.
pub fn sample_positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    // U uniform on (0, pi), open at both ends.
    let u = loop {
        let u: f64 = rng.random::<f64>() * PI;
        if u > 0.0 {
            break u;
        }
    };
    let w: f64 = Exp1.sample(rng);
    let a = (alpha * u).sin().powf(alpha / (1.0 - alpha)) * ((1.0 - alpha) * u).sin()
        / u.sin().powf(1.0 / (1.0 - alpha));
    (a / w).powf((1.0 - alpha) / alpha)
}

/// Draws one pair from the Gumbel copula through the frailty construction:
/// with `V` positive stable of index `1/θ` and `E1, E2` standard exponential,
/// `(exp(-(E1/V)^(1/θ)), exp(-(E2/V)^(1/θ)))` has the Gumbel(θ) law.
pub fn sample_gumbel_pair<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> (f64, f64) {
    assert!(theta >= 1.0, "Gumbel parameter must be >= 1, got {theta}");
    let alpha = 1.0 / theta;
    let v = sample_positive_stable(alpha, rng);
    let e1: f64 = Exp1.sample(rng);
    let e2: f64 = Exp1.sample(rng);
    ((-(e1 / v).powf(alpha)).exp(), (-(e2 / v).powf(alpha)).exp())
}

/// Mid-ranks (1-based, ties averaged).
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Ranks scaled by `n + 1`, so every value lies strictly inside (0, 1).
pub fn pseudo_observations(x: &[f64]) -> Vec<f64> {
    let scale = x.len() as f64 + 1.0;
    average_ranks(x).into_iter().map(|r| r / scale).collect()
}

/// `sum_i (C_n(u_i, v_i) - u_i v_i)^2` over the pseudo-observations.
fn cvm_independence(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() as f64;
    u.iter()
        .zip(v)
        .map(|(&ui, &vi)| {
            let c = u
                .iter()
                .zip(v)
                .filter(|&(&uj, &vj)| uj <= ui && vj <= vi)
                .count() as f64
                / n;
            (c - ui * vi).powi(2)
        })
        .sum()
}

/// Cramér–von Mises test of independence between `x` and `y`.
///
/// The null distribution is built by permuting `y` against `x`; replicate
/// `b` draws from substream `b` of `seed`, so the p-value does not depend on
/// the rayon thread count. Returns `(statistic, p_value)` with
/// `p = (1 + #{S* >= S}) / (B + 1)`.
pub fn copula_independence_test(
    x: &[f64],
    y: &[f64],
    n_bootstrap: usize,
    seed: u64,
) -> Result<(f64, f64), DependenceError> {
    check_pairs(x, y, 20)?;
    if n_bootstrap < 200 {
        return Err(DependenceError::TooFewReplicates(n_bootstrap));
    }
    let u = pseudo_observations(x);
    let v = pseudo_observations(y);
    let observed = cvm_independence(&u, &v);

    let exceed: usize = (0..n_bootstrap as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b);
            let mut vb = v.clone();
            vb.shuffle(&mut rng);
            usize::from(cvm_independence(&u, &vb) >= observed - 1e-12)
        })
        .sum();
    let p = (1 + exceed) as f64 / (n_bootstrap + 1) as f64;
    Ok((observed, p))
}

/// Builds the full [`DependenceReport`] for one pair of monthly series.
pub fn dependence_report(
    x: &[f64],
    y: &[f64],
    n_bootstrap: usize,
    seed: u64,
) -> Result<DependenceReport, DependenceError> {
    let (pearson_r, pearson_p) = pearson_correlation(x, y)?;
    let kendall = kendall_tau(x, y)?;
    let gumbel_theta = gumbel_theta_from_tau(kendall)?;
    let (cvm_statistic, independence_p) = copula_independence_test(x, y, n_bootstrap, seed)?;
    let mut warnings = Vec::new();
    if kendall < 0.0 {
        warnings.push(format!(
            "Kendall tau {kendall:.4} is negative; Gumbel parameter clamped to 1"
        ));
    }
    Ok(DependenceReport {
        pearson_r,
        pearson_p,
        kendall_tau: kendall,
        gumbel_theta,
        cvm_statistic,
        independence_p,
        warnings,
    })
}
