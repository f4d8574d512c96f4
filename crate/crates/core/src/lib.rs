//! Ruin probabilities for a non-life portfolio under independent and
//! copula-dependent claim frequency and severity.
//!
//! The crate covers the full workflow: loading monthly claims data
//! ([`ingest`]), fitting frequency and severity models ([`dist_fit`]),
//! measuring frequency/severity dependence ([`dependence`]), simulating the
//! surplus process ([`risk_process`]), estimating ruin probabilities by
//! simulation, closed form and recursion ([`ruin`]), and comparing the
//! resulting curves with rank tests ([`nonparam`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dependence;
pub mod dist_fit;
pub mod ingest;
pub mod nonparam;
pub mod pipeline;
pub mod risk_process;
pub mod rng;
pub mod ruin;
pub mod synthetic;

pub use pipeline::{
    analyze, emit_tables, run_pipeline, AnalysisReport, PipelineConfig, PipelineError,
};
pub use risk_process::{Assumption, Monitoring, RiskModel};
