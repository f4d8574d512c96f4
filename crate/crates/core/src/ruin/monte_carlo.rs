use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::risk_process::{Assumption, ClaimSampler, ModelError, RiskModel, Scratch};
use crate::rng::substream;

/// Smallest number of paths accepted by the estimators.
pub const MIN_PATHS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error("need at least {MIN_PATHS} paths, got {0}")]
    TooFewPaths(usize),
    #[error("surplus grid is empty")]
    EmptyGrid,
    #[error("surplus grid must be sorted ascending and non-negative")]
    UnsortedGrid,
}

/// Monte Carlo ruin probability at one initial surplus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinEstimate {
    pub u0: f64,
    pub assumption: Assumption,
    pub psi_hat: f64,
    /// Binomial standard error `sqrt(psi (1 - psi) / n)`.
    pub std_error: f64,
    pub n_paths: usize,
    pub horizon: usize,
}

impl RuinEstimate {
    fn from_count(
        u0: f64,
        assumption: Assumption,
        ruined: usize,
        n_paths: usize,
        horizon: usize,
    ) -> Self {
        let psi_hat = ruined as f64 / n_paths as f64;
        RuinEstimate {
            u0,
            assumption,
            psi_hat,
            std_error: (psi_hat * (1.0 - psi_hat) / n_paths as f64).sqrt(),
            n_paths,
            horizon,
        }
    }

    /// Wilson score interval; stays inside [0, 1] and is informative when
    /// `psi_hat` is 0 or 1.
    pub fn wilson_interval(&self, z: f64) -> (f64, f64) {
        let n = self.n_paths as f64;
        let p = self.psi_hat;
        let z2 = z * z;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
        ((centre - half).max(0.0), (centre + half).min(1.0))
    }
}

pub fn estimate_ruin_mc(
    model: &RiskModel,
    u0: f64,
    assumption: Assumption,
    n_paths: usize,
    master_seed: u64,
) -> Result<RuinEstimate, McError> {
    let mut curve = ruin_curve(model, &[u0], assumption, n_paths, master_seed)?;
    Ok(curve.remove(0))
}

/// Ruin probabilities over a grid of initial surpluses.
///
/// Every grid point is evaluated on the same simulated paths: a path is
/// ruined from `u` exactly when `u` plus its lowest monitored level is
/// negative. The curve is therefore non-increasing along the grid for every
/// seed. Path `i` draws from substream `i` of `master_seed`, so the result is
/// independent of the number of worker threads.
pub fn ruin_curve(
    model: &RiskModel,
    surplus_grid: &[f64],
    assumption: Assumption,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<RuinEstimate>, McError> {
    model.validate()?;
    if n_paths < MIN_PATHS {
        return Err(McError::TooFewPaths(n_paths));
    }
    let (first, last) = match (surplus_grid.first(), surplus_grid.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(McError::EmptyGrid),
    };
    if !(first >= 0.0) || surplus_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(McError::UnsortedGrid);
    }

    let sampler = ClaimSampler::new(model);
    let stop_below = -last;
    let minima: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map_init(Scratch::default, |scratch, i| {
            let mut rng = substream(master_seed, i);
            sampler.path_minimum(assumption, &mut rng, stop_below, scratch)
        })
        .collect();

    Ok(surplus_grid
        .iter()
        .map(|&u0| {
            let ruined = minima.iter().filter(|&&m| u0 + m < 0.0).count();
            RuinEstimate::from_count(u0, assumption, ruined, n_paths, model.horizon)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk_process::premium_per_period;

    #[test]
    fn rejects_bad_inputs() {
        let m = RiskModel::new(1.0, 1.0, 0.2);
        assert_eq!(
            ruin_curve(&m, &[0.0], Assumption::Independent, 10, 1),
            Err(McError::TooFewPaths(10))
        );
        assert_eq!(
            ruin_curve(&m, &[], Assumption::Independent, 1000, 1),
            Err(McError::EmptyGrid)
        );
        assert_eq!(
            ruin_curve(&m, &[2.0, 1.0], Assumption::Independent, 1000, 1),
            Err(McError::UnsortedGrid)
        );
        assert!(matches!(
            ruin_curve(
                &RiskModel::new(1.0, 1.0, -0.1),
                &[0.0],
                Assumption::Independent,
                1000,
                1
            ),
            Err(McError::Model(_))
        ));
    }

    #[test]
    fn unreachable_surplus_never_ruins() {
        let m = RiskModel::new(2.0, 1.0, 0.1).with_horizon(50);
        let u0 = 50.0 * m.horizon as f64 * premium_per_period(&m);
        let est = estimate_ruin_mc(&m, u0, Assumption::Dependent, 2000, 4).unwrap();
        assert_eq!(est.psi_hat, 0.0);
        assert_eq!(est.std_error, 0.0);
        let (lo, hi) = est.wilson_interval(1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
    }

    #[test]
    fn standard_error_is_binomial() {
        let m = RiskModel::new(2.0, 1.0, 0.1).with_horizon(30);
        let est = estimate_ruin_mc(&m, 1.0, Assumption::Independent, 4000, 8).unwrap();
        let p = est.psi_hat;
        assert!(p > 0.0 && p < 1.0);
        assert_eq!(est.std_error, (p * (1.0 - p) / 4000.0).sqrt());
    }

    #[test]
    fn single_point_matches_curve() {
        let m = RiskModel::new(3.0, 0.5, 0.2)
            .with_copula_theta(2.0)
            .with_horizon(40);
        let grid = [0.0, 2.0, 5.0];
        let curve = ruin_curve(&m, &grid, Assumption::Dependent, 1500, 77).unwrap();
        for est in &curve {
            let single = estimate_ruin_mc(&m, est.u0, Assumption::Dependent, 1500, 77).unwrap();
            assert_eq!(&single, est);
        }
    }
}
