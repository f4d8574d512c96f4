//! Maximum-likelihood fits for claim frequency (Poisson) and claim severity
//! (exponential), with chi-square goodness-of-fit tests.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};
use thiserror::Error;

/// Minimum expected frequency per chi-square cell.
pub const MIN_EXPECTED: f64 = 5.0;

/// Default number of equiprobable cells for the severity test.
pub const DEFAULT_SEVERITY_BINS: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("observation {index} is {value}; amounts must be positive and finite")]
    NonPositive { index: usize, value: f64 },
    #[error("chi-square statistic must be >= 0, got {0}")]
    NegativeStatistic(f64),
    #[error("degrees of freedom must be >= 1")]
    ZeroDof,
    #[error("sample has no variation; a goodness-of-fit test is meaningless")]
    Degenerate,
    #[error("only {0} cells remain after pooling; at least 3 are needed")]
    TooFewBins(usize),
    #[error("totals and counts have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Poisson rate fitted to monthly claim counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyFit {
    /// Claims per month.
    pub lambda_hat: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Exponential rate fitted to claim amounts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityFit {
    /// Reciprocal of the mean claim amount.
    pub rate_hat: f64,
    pub std_error: f64,
    /// Number of claims the rate is based on.
    pub n: usize,
}

impl SeverityFit {
    pub fn mean(&self) -> f64 {
        1.0 / self.rate_hat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
}

pub fn fit_poisson(counts: &[u64]) -> Result<FrequencyFit, FitError> {
    if counts.len() < 2 {
        return Err(FitError::InsufficientData {
            needed: 2,
            got: counts.len(),
        });
    }
    let n = counts.len();
    let total: u64 = counts.iter().sum();
    let lambda_hat = total as f64 / n as f64;
    Ok(FrequencyFit {
        lambda_hat,
        std_error: (lambda_hat / n as f64).sqrt(),
        n,
    })
}

pub fn fit_exponential(amounts: &[f64]) -> Result<SeverityFit, FitError> {
    if amounts.len() < 2 {
        return Err(FitError::InsufficientData {
            needed: 2,
            got: amounts.len(),
        });
    }
    check_positive(amounts)?;
    let n = amounts.len();
    let mean = amounts.iter().sum::<f64>() / n as f64;
    let rate_hat = 1.0 / mean;
    Ok(SeverityFit {
        rate_hat,
        std_error: rate_hat / (n as f64).sqrt(),
        n,
    })
}

/// Exponential MLE when only monthly totals and claim counts are observed.
///
/// A month with `k` claims contributes a Gamma(k, rate) total, so the MLE is
/// `sum(counts) / sum(totals)`: the same estimate as fitting the individual
/// claims, had they been recorded. Months without claims carry no information
/// about severity and are skipped.
pub fn fit_exponential_grouped(totals: &[f64], counts: &[u64]) -> Result<SeverityFit, FitError> {
    if totals.len() != counts.len() {
        return Err(FitError::LengthMismatch(totals.len(), counts.len()));
    }
    let mut n_claims: u64 = 0;
    let mut paid = 0.0;
    for (i, (&t, &k)) in totals.iter().zip(counts).enumerate() {
        if k == 0 {
            continue;
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(FitError::NonPositive { index: i, value: t });
        }
        n_claims += k;
        paid += t;
    }
    if n_claims < 2 {
        return Err(FitError::InsufficientData {
            needed: 2,
            got: n_claims as usize,
        });
    }
    let rate_hat = n_claims as f64 / paid;
    Ok(SeverityFit {
        rate_hat,
        std_error: rate_hat / (n_claims as f64).sqrt(),
        n: n_claims as usize,
    })
}

fn check_positive(amounts: &[f64]) -> Result<(), FitError> {
    match amounts
        .iter()
        .enumerate()
        .find(|(_, a)| !(a.is_finite() && **a > 0.0))
    {
        Some((index, &value)) => Err(FitError::NonPositive { index, value }),
        None => Ok(()),
    }
}

/// Upper-tail probability of a chi-square variate, `Q(dof/2, statistic/2)`.
pub fn chi_square_upper_tail(statistic: f64, dof: u32) -> Result<f64, FitError> {
    if dof == 0 {
        return Err(FitError::ZeroDof);
    }
    if statistic.is_nan() || statistic < 0.0 {
        return Err(FitError::NegativeStatistic(statistic));
    }
    if statistic == 0.0 {
        return Ok(1.0);
    }
    if statistic.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_ur(f64::from(dof) / 2.0, statistic / 2.0).clamp(0.0, 1.0))
}

/// One pooled chi-square cell.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    observed: f64,
    expected: f64,
}

fn pearson_statistic(cells: &[Cell]) -> f64 {
    cells
        .iter()
        .map(|c| (c.observed - c.expected).powi(2) / c.expected)
        .sum()
}

/// Chi-square test of the Poisson fit.
///
/// Cells are single count values, pooled left to right until each has
/// expected frequency of at least five; the final cell absorbs the upper tail.
/// Degrees of freedom are `cells - 2` (one estimated parameter).
pub fn gof_poisson(counts: &[u64], fit: &FrequencyFit) -> Result<GofResult, FitError> {
    if counts.len() < 10 {
        return Err(FitError::InsufficientData {
            needed: 10,
            got: counts.len(),
        });
    }
    if counts.iter().all(|&c| c == counts[0]) {
        return Err(FitError::Degenerate);
    }
    let n = counts.len() as f64;
    let lambda = fit.lambda_hat;
    let max_obs = *counts.iter().max().unwrap_or(&0);
    let k_max = (max_obs as f64)
        .max(lambda + 10.0 * lambda.sqrt() + 10.0)
        .ceil() as u64;

    let mut observed = vec![0.0; k_max as usize + 1];
    for &c in counts {
        observed[c as usize] += 1.0;
    }

    let mut cells: Vec<Cell> = Vec::new();
    let mut acc = Cell {
        observed: 0.0,
        expected: 0.0,
    };
    let mut cdf = 0.0;
    for k in 0..=k_max {
        let p = (k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)).exp();
        let p = if lambda == 0.0 {
            if k == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            p
        };
        cdf += p;
        acc.observed += observed[k as usize];
        acc.expected += n * p;
        if acc.expected >= MIN_EXPECTED {
            cells.push(acc);
            acc = Cell {
                observed: 0.0,
                expected: 0.0,
            };
        }
    }
    // Upper tail beyond k_max.
    acc.expected += n * (1.0 - cdf).max(0.0);
    match cells.last_mut() {
        Some(last) if acc.expected < MIN_EXPECTED => {
            last.observed += acc.observed;
            last.expected += acc.expected;
        }
        _ => cells.push(acc),
    }

    if cells.len() < 3 {
        return Err(FitError::TooFewBins(cells.len()));
    }
    let statistic = pearson_statistic(&cells);
    let dof = (cells.len() - 2) as u32;
    Ok(GofResult {
        statistic,
        dof,
        p_value: chi_square_upper_tail(statistic, dof)?,
    })
}

/// Chi-square test of exponential severities from grouped monthly totals.
///
/// Each month with `k > 0` claims is mapped through the fitted Gamma(k, rate)
/// distribution function; under the model these values are uniform, so the
/// cells are equiprobable under the fitted law. With every `k = 1` this is the
/// usual equiprobable-bin test for an exponential sample. The cell count is
/// reduced from `n_bins` until each cell expects at least five observations.
pub fn gof_exponential_grouped(
    totals: &[f64],
    counts: &[u64],
    fit: &SeverityFit,
    n_bins: usize,
) -> Result<GofResult, FitError> {
    if totals.len() != counts.len() {
        return Err(FitError::LengthMismatch(totals.len(), counts.len()));
    }
    let pit: Vec<f64> = totals
        .iter()
        .zip(counts)
        .filter(|(_, &k)| k > 0)
        .map(|(&t, &k)| gamma_lr(k as f64, fit.rate_hat * t))
        .collect();
    if pit.len() < 10 {
        return Err(FitError::InsufficientData {
            needed: 10,
            got: pit.len(),
        });
    }
    let m = pit.len();
    let bins = n_bins.min((m as f64 / MIN_EXPECTED).floor() as usize);
    if bins < 3 {
        return Err(FitError::TooFewBins(bins));
    }
    let mut cells = vec![
        Cell {
            observed: 0.0,
            expected: m as f64 / bins as f64,
        };
        bins
    ];
    for p in pit {
        let idx = ((p * bins as f64).floor() as usize).min(bins - 1);
        cells[idx].observed += 1.0;
    }
    let statistic = pearson_statistic(&cells);
    let dof = (bins - 2) as u32;
    Ok(GofResult {
        statistic,
        dof,
        p_value: chi_square_upper_tail(statistic, dof)?,
    })
}

/// Equiprobable-bin test for individually observed exponential amounts.
pub fn gof_exponential(
    amounts: &[f64],
    fit: &SeverityFit,
    n_bins: usize,
) -> Result<GofResult, FitError> {
    check_positive(amounts)?;
    let ones = vec![1u64; amounts.len()];
    gof_exponential_grouped(amounts, &ones, fit, n_bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn poisson_mle_is_mean() {
        let f = fit_poisson(&[2, 2, 2]).unwrap();
        assert_eq!(f.lambda_hat, 2.0);
        assert_relative_eq!(f.std_error, (2.0f64 / 3.0).sqrt());
        assert!(fit_poisson(&[3]).is_err());
        assert!(fit_poisson(&[]).is_err());
    }

    #[test]
    fn exponential_mle_is_reciprocal_mean() {
        assert_eq!(fit_exponential(&[1.0, 1.0, 1.0]).unwrap().rate_hat, 1.0);
        assert_relative_eq!(fit_exponential(&[2.0, 4.0]).unwrap().rate_hat, 1.0 / 3.0);
        assert!(matches!(
            fit_exponential(&[1.0, 0.0]),
            Err(FitError::NonPositive { index: 1, .. })
        ));
        assert!(matches!(
            fit_exponential(&[1.0]),
            Err(FitError::InsufficientData { .. })
        ));
    }

    #[test]
    fn overall_mean_gives_published_rate() {
        let f = fit_exponential(&[365932.23, 365932.23]).unwrap();
        assert!((f.rate_hat - 0.00000273).abs() < 0.005e-6);
    }

    #[test]
    fn grouped_fit_matches_expanded_claims() {
        // Months of (total, count); expanded claims would be the per-claim split.
        let totals = [30.0, 0.0, 10.0, 8.0];
        let counts = [3, 0, 1, 2];
        let g = fit_exponential_grouped(&totals, &counts).unwrap();
        let expanded = [10.0, 10.0, 10.0, 10.0, 4.0, 4.0];
        let e = fit_exponential(&expanded).unwrap();
        assert_relative_eq!(g.rate_hat, e.rate_hat);
        assert_eq!(g.n, 6);
        assert_relative_eq!(g.std_error, e.std_error);
    }

    #[test]
    fn chi_square_tail_edges() {
        assert_eq!(chi_square_upper_tail(0.0, 58).unwrap(), 1.0);
        assert!(chi_square_upper_tail(-1.0, 3).is_err());
        assert!(chi_square_upper_tail(1.0, 0).is_err());
        // dof 2 has the closed form exp(-x/2).
        assert_relative_eq!(
            chi_square_upper_tail(3.0, 2).unwrap(),
            (-1.5f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn published_goodness_of_fit_tails() {
        for (x, p) in [(48.845, 0.7986), (45.652, 0.8803)] {
            assert!((chi_square_upper_tail(x, 58).unwrap() - p).abs() < 5e-4);
        }
    }

    #[test]
    fn constant_counts_are_degenerate() {
        let counts = vec![5u64; 60];
        let fit = fit_poisson(&counts).unwrap();
        assert_eq!(gof_poisson(&counts, &fit), Err(FitError::Degenerate));
    }

    #[test]
    fn pooled_cells_meet_minimum_expectation() {
        let counts: Vec<u64> = (0..60).map(|i| 2 + (i % 5)).collect();
        let fit = fit_poisson(&counts).unwrap();
        let g = gof_poisson(&counts, &fit).unwrap();
        assert!(g.dof >= 1);
        assert!((0.0..=1.0).contains(&g.p_value));
    }
}
