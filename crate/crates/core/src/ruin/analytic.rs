use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::risk_process::{premium_per_period, ModelError, RiskModel};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error("no sign change on (0, beta): the net profit condition fails")]
    NoSignChange,
}

/// Positive root `R` of `E[exp(R (S - c))] = 1` for one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentCoefficient {
    pub r: f64,
    /// `|E[exp(R (S - c))] - 1|` at the returned root.
    pub residual: f64,
}

/// Adjustment coefficient for compound Poisson claims with exponential
/// severities.
///
/// With `S` compound Poisson, `ln E[exp(r (S - c))] = lambda (beta / (beta - r) - 1) - c r`.
/// The trivial root `r = 0` is divided out and the remaining factor
/// `lambda / (beta - r) - c`, increasing on `(0, beta)`, is bisected to
/// relative width 1e-12 or below.
pub fn adjustment_coefficient(model: &RiskModel) -> Result<AdjustmentCoefficient, AnalyticError> {
    model.validate()?;
    let (lambda, beta) = (model.lambda, model.beta);
    let c = premium_per_period(model);
    let reduced = |r: f64| lambda / (beta - r) - c;

    let (mut lo, mut hi) = (0.0, beta);
    if !(reduced(lo) < 0.0) {
        return Err(AnalyticError::NoSignChange);
    }
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // reduced(r) -> +inf as r -> beta, so the upper end needs no evaluation.
        if reduced(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let log_mgf = lambda * (beta / (beta - r) - 1.0) - c * r;
    Ok(AdjustmentCoefficient {
        r,
        residual: log_mgf.exp_m1().abs(),
    })
}

/// Infinite-horizon ruin probability for compound Poisson claims with
/// exponential severities, `psi(u) = exp(-R u) / (1 + loading)`.
pub fn cramer_lundberg_psi(model: &RiskModel, u0: f64) -> Result<f64, AnalyticError> {
    let adj = adjustment_coefficient(model)?;
    Ok((-adj.r * u0).exp() / (1.0 + model.loading))
}

/// Lundberg's upper bound `exp(-R u)`.
pub fn lundberg_bound(model: &RiskModel, u0: f64) -> Result<f64, AnalyticError> {
    Ok((-adjustment_coefficient(model)?.r * u0).exp())
}

/// Bound on the ruin probability remaining after the simulated horizon: the
/// Lundberg bound at the expected surplus at the horizon's end. This is the
/// truncation bias of a finite-horizon estimate of infinite-horizon ruin.
pub fn truncation_bound(model: &RiskModel, u0: f64) -> Result<f64, AnalyticError> {
    let expected_surplus = u0 + model.horizon as f64 * model.drift();
    lundberg_bound(model, expected_surplus)
}
