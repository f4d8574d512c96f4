//! Ruin probabilities: Monte Carlo over the surplus process, closed-form
//! results for exponential claims, and the finite-time recursion with
//! Markov-modulated interest.

mod analytic;
mod monte_carlo;
mod recursion;

pub use analytic::{
    adjustment_coefficient, cramer_lundberg_psi, lundberg_bound, truncation_bound,
    AdjustmentCoefficient, AnalyticError,
};
pub use monte_carlo::{estimate_ruin_mc, ruin_curve, McError, RuinEstimate, MIN_PATHS};
pub use recursion::{
    finite_time_ruin_profile, finite_time_ruin_recursive, finite_time_ruin_refined,
    ExponentialLoss, InterestModel, LossDistribution, RecursionError, RecursionSetup,
};
