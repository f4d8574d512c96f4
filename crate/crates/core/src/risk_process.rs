//! Discrete-time surplus process `U_n = U_{n-1} + c - S_n` with compound
//! Poisson period losses, under independence or Gumbel-copula dependence
//! between the claim count and the claim sizes of a period.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};
use thiserror::Error;

use crate::dependence::sample_gumbel_pair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assumption {
    Independent,
    Dependent,
}

impl Assumption {
    pub const BOTH: [Assumption; 2] = [Assumption::Dependent, Assumption::Independent];

    pub fn as_str(self) -> &'static str {
        match self {
            Assumption::Independent => "independent",
            Assumption::Dependent => "dependent",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// When ruin is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitoring {
    /// Premium `c` is credited and the period's claims debited at the period
    /// end; ruin is a negative period-end surplus.
    #[default]
    PeriodEnd,
    /// Premium accrues linearly over the period and claims arrive at uniform
    /// times within it; ruin is checked just after every claim. This is the
    /// continuous-time Cramér–Lundberg process observed exactly.
    ClaimInstants,
}

impl FromStr for Monitoring {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "period_end" => Ok(Monitoring::PeriodEnd),
            "claim_instants" => Ok(Monitoring::ClaimInstants),
            other => Err(format!("unknown monitoring mode `{other}`")),
        }
    }
}

impl fmt::Display for Monitoring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Monitoring::PeriodEnd => "period_end",
            Monitoring::ClaimInstants => "claim_instants",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("claim rate must be finite and >= 0, got {0}")]
    Lambda(f64),
    #[error("severity rate must be finite and > 0, got {0}")]
    Beta(f64),
    #[error("premium loading must be > 0 (net profit condition), got {0}")]
    Loading(f64),
    #[error("copula parameter must be >= 1, got {0}")]
    CopulaTheta(f64),
    #[error("horizon must be at least one period")]
    Horizon,
}

/// Parameters of the surplus process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskModel {
    /// Expected claims per period.
    pub lambda: f64,
    /// Exponential severity rate (one over the mean claim).
    pub beta: f64,
    /// Premium loading; `c = (1 + loading) * lambda / beta`.
    pub loading: f64,
    /// Gumbel parameter coupling count and severity under dependence.
    pub copula_theta: f64,
    /// Number of periods simulated.
    pub horizon: usize,
    #[serde(default)]
    pub monitoring: Monitoring,
}

impl RiskModel {
    pub fn new(lambda: f64, beta: f64, loading: f64) -> Self {
        RiskModel {
            lambda,
            beta,
            loading,
            copula_theta: 1.0,
            horizon: 60,
            monitoring: Monitoring::PeriodEnd,
        }
    }

    pub fn with_copula_theta(mut self, theta: f64) -> Self {
        self.copula_theta = theta;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_monitoring(mut self, monitoring: Monitoring) -> Self {
        self.monitoring = monitoring;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(ModelError::Lambda(self.lambda));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(ModelError::Beta(self.beta));
        }
        if !(self.loading.is_finite() && self.loading > 0.0) {
            return Err(ModelError::Loading(self.loading));
        }
        if !(self.copula_theta.is_finite() && self.copula_theta >= 1.0) {
            return Err(ModelError::CopulaTheta(self.copula_theta));
        }
        if self.horizon == 0 {
            return Err(ModelError::Horizon);
        }
        Ok(())
    }

    /// Expected loss per period under independence, `lambda / beta`.
    pub fn expected_loss(&self) -> f64 {
        self.lambda / self.beta
    }

    /// Long-run drift per period, `c - lambda / beta`.
    pub fn drift(&self) -> f64 {
        premium_per_period(self) - self.expected_loss()
    }
}

/// `c = (1 + loading) * lambda / beta`.
pub fn premium_per_period(model: &RiskModel) -> f64 {
    (1.0 + model.loading) * model.lambda / model.beta
}

/// Poisson probabilities and cumulative sums for `k = 0, 1, ...` until the
/// cumulative mass stops changing.
fn poisson_cdf_table(lambda: f64) -> Vec<f64> {
    let mut cdf = Vec::new();
    if lambda == 0.0 {
        cdf.push(1.0);
        return cdf;
    }
    let ln_l = lambda.ln();
    let mut acc = 0.0;
    let mut k = 0u64;
    loop {
        let p = (k as f64 * ln_l - lambda - ln_gamma(k as f64 + 1.0)).exp();
        acc += p;
        cdf.push(acc.min(1.0));
        if (k as f64 > lambda && p < 1e-18 * acc) || acc >= 1.0 {
            break;
        }
        k += 1;
    }
    cdf
}

/// Smallest `n` with `P(N <= n) >= u` for `N ~ Poisson(lambda)`.
pub fn poisson_quantile(u: f64, lambda: f64) -> u64 {
    let table = poisson_cdf_table(lambda);
    quantile_from_table(&table, u)
}

fn quantile_from_table(table: &[f64], u: f64) -> u64 {
    // Past the end of the table the cumulative mass is 1 to machine precision.
    table.partition_point(|&c| c < u).min(table.len() - 1) as u64
}

/// Quantile of Gamma(shape, 1) at `v`, by safeguarded Newton iteration.
pub fn gamma_quantile(v: f64, shape: f64) -> f64 {
    assert!(shape > 0.0, "shape must be positive");
    if v <= 0.0 {
        return 0.0;
    }
    if v >= 1.0 {
        return f64::INFINITY;
    }
    if shape == 1.0 {
        return -(-v).ln_1p();
    }
    let upper = v > 0.5;
    let target = if upper { 1.0 - v } else { v };
    // Signed residual, increasing in x.
    let resid = |x: f64| {
        if upper {
            target - gamma_ur(shape, x)
        } else {
            gamma_lr(shape, x) - target
        }
    };
    let log_norm = ln_gamma(shape);
    let density = |x: f64| ((shape - 1.0) * x.ln() - x - log_norm).exp();

    // Wilson–Hilferty start.
    let z = Normal::standard().inverse_cdf(v);
    let c = 1.0 / (9.0 * shape);
    let mut x = (shape * (1.0 - c + z * c.sqrt()).powi(3)).max(1e-8 * shape);

    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..200 {
        let r = resid(x);
        if r == 0.0 {
            return x;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - r / density(x);
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * x.max(1.0)
            };
        }
        if (next - x).abs() <= 1e-14 * x.max(1e-300) {
            return next;
        }
        x = next;
    }
    x
}

/// Total of `count` claims whose severity uniform is `v`: the `v`-quantile of
/// Gamma(count, rate), i.e. of a sum of `count` independent Exp(rate) claims.
pub fn conditional_period_loss(count: u64, v: f64, rate: f64) -> f64 {
    if count == 0 {
        return 0.0;
    }
    gamma_quantile(v, count as f64) / rate
}

/// Sampler for one period's claims, prepared once per model.
#[derive(Debug, Clone)]
pub struct ClaimSampler {
    model: RiskModel,
    premium: f64,
    poisson: Option<Poisson<f64>>,
    cdf_table: Vec<f64>,
}

/// What a period contributes to the surplus, relative to its opening level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodOutcome {
    pub count: u64,
    /// Aggregate loss `S`.
    pub total: f64,
    /// Lowest monitored surplus change within the period: `c - S` at the
    /// period end, or the minimum just after each claim when monitoring
    /// claim instants.
    pub low: f64,
}

/// Reusable buffers so the hot loop does not allocate.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    sizes: Vec<f64>,
    times: Vec<f64>,
}

impl ClaimSampler {
    pub fn new(model: &RiskModel) -> Self {
        let poisson = (model.lambda > 0.0)
            .then(|| Poisson::new(model.lambda).expect("validated positive rate"));
        ClaimSampler {
            model: *model,
            premium: premium_per_period(model),
            poisson,
            cdf_table: poisson_cdf_table(model.lambda),
        }
    }

    pub fn premium(&self) -> f64 {
        self.premium
    }

    /// Draws claim sizes for one period into `sizes`; returns the total.
    pub fn draw_claims<R: Rng + ?Sized>(
        &self,
        assumption: Assumption,
        rng: &mut R,
        sizes: &mut Vec<f64>,
    ) -> f64 {
        sizes.clear();
        let beta = self.model.beta;
        // At theta = 1 the copula is the independence copula; using the
        // independent sampler keeps same-seed runs of both assumptions identical.
        let coupled = assumption == Assumption::Dependent && self.model.copula_theta > 1.0;
        match coupled {
            false => {
                let n = match &self.poisson {
                    Some(p) => p.sample(rng) as u64,
                    None => 0,
                };
                let mut total = 0.0;
                for _ in 0..n {
                    let z = Distribution::<f64>::sample(&Exp1, rng) / beta;
                    total += z;
                    sizes.push(z);
                }
                total
            }
            true => {
                let (u, v) = sample_gumbel_pair(self.model.copula_theta, rng);
                let n = quantile_from_table(&self.cdf_table, u);
                if n == 0 {
                    return 0.0;
                }
                // Sizes are the total split by normalized exponential spacings,
                // which is the conditional law of n Exp(beta) claims given their
                // sum; the sum itself is driven by the copula's second uniform.
                let mut spacing_sum = 0.0;
                for _ in 0..n {
                    let e: f64 = Exp1.sample(rng);
                    spacing_sum += e;
                    sizes.push(e);
                }
                let total = conditional_period_loss(n, v, beta);
                let scale = total / spacing_sum;
                for z in sizes.iter_mut() {
                    *z *= scale;
                }
                total
            }
        }
    }

    pub fn period<R: Rng + ?Sized>(
        &self,
        assumption: Assumption,
        rng: &mut R,
        scratch: &mut Scratch,
    ) -> PeriodOutcome {
        let total = self.draw_claims(assumption, rng, &mut scratch.sizes);
        let count = scratch.sizes.len() as u64;
        let end = self.premium - total;
        let low = match self.model.monitoring {
            Monitoring::PeriodEnd => end,
            Monitoring::ClaimInstants => {
                let times = &mut scratch.times;
                times.clear();
                times.extend((0..count).map(|_| rng.random::<f64>()));
                times.sort_by(f64::total_cmp);
                let mut low = end;
                let mut paid = 0.0;
                for (t, z) in times.iter().zip(&scratch.sizes) {
                    paid += z;
                    low = low.min(self.premium * t - paid);
                }
                low
            }
        };
        PeriodOutcome { count, total, low }
    }

    /// Lowest monitored value of `premiums - claims` over the horizon.
    /// Stops early once it drops below `stop_below`, since the caller only
    /// compares it against initial surpluses no larger than `-stop_below`.
    pub fn path_minimum<R: Rng + ?Sized>(
        &self,
        assumption: Assumption,
        rng: &mut R,
        stop_below: f64,
        scratch: &mut Scratch,
    ) -> f64 {
        let mut level = 0.0;
        let mut min = f64::INFINITY;
        for _ in 0..self.model.horizon {
            let out = self.period(assumption, rng, scratch);
            min = min.min(level + out.low);
            if min < stop_below {
                break;
            }
            level += self.premium - out.total;
        }
        min
    }
}

/// Period loss with count and sizes independent.
pub fn aggregate_claims_independent<R: Rng + ?Sized>(model: &RiskModel, rng: &mut R) -> f64 {
    ClaimSampler::new(model).draw_claims(Assumption::Independent, rng, &mut Vec::new())
}

/// Period loss with the count and the size level coupled by the Gumbel copula.
pub fn aggregate_claims_dependent<R: Rng + ?Sized>(model: &RiskModel, rng: &mut R) -> f64 {
    ClaimSampler::new(model).draw_claims(Assumption::Dependent, rng, &mut Vec::new())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurplusPath {
    pub u0: f64,
    /// `values[0] = u0`, `values[n]` is the surplus at the end of period `n`.
    pub values: Vec<f64>,
    /// First period in which the monitored surplus went negative.
    pub ruin_time: Option<usize>,
}

/// Simulates one path until ruin or the horizon.
pub fn simulate_surplus_path<R: Rng + ?Sized>(
    model: &RiskModel,
    u0: f64,
    assumption: Assumption,
    rng: &mut R,
) -> SurplusPath {
    let sampler = ClaimSampler::new(model);
    let mut scratch = Scratch::default();
    let mut values = Vec::with_capacity(model.horizon + 1);
    values.push(u0);
    let mut level = u0;
    let mut ruin_time = None;
    for n in 1..=model.horizon {
        let out = sampler.period(assumption, rng, &mut scratch);
        let dipped = level + out.low < 0.0;
        level += sampler.premium() - out.total;
        values.push(level);
        if dipped {
            ruin_time = Some(n);
            break;
        }
    }
    SurplusPath {
        u0,
        values,
        ruin_time,
    }
}
