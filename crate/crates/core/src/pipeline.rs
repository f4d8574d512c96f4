//! End-to-end analysis: ingest, fit, dependence, ruin curves and rank tests,
//! with the results written as fixed-schema CSV tables plus a JSON envelope.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dependence::{dependence_report, pearson_correlation, DependenceReport};
use crate::dist_fit::{
    fit_exponential_grouped, fit_poisson, gof_exponential_grouped, gof_poisson, FrequencyFit,
    GofResult, SeverityFit, DEFAULT_SEVERITY_BINS,
};
use crate::ingest::{load_claims_csv, summarize, Field, MonthlyRecord, Product, SummaryStats};
use crate::nonparam::{friedman, wilcoxon_signed_rank, TestError, TestResult};
use crate::risk_process::{premium_per_period, Assumption, Monitoring, RiskModel};
use crate::rng::derive_seed;
use crate::ruin::{adjustment_coefficient, ruin_curve, RuinEstimate, MIN_PATHS};

/// Smallest loading used when the data imply a non-positive margin.
pub const LOADING_FLOOR: f64 = 0.01;

/// Label of the all-products segment.
pub const OVERALL: &str = "Overall";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum LoadingMode {
    Fixed(f64),
    /// `mean(premium) / mean(claims_paid) - 1` per segment.
    Implied,
}

impl fmt::Display for LoadingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadingMode::Fixed(x) => write!(f, "fixed:{x}"),
            LoadingMode::Implied => f.write_str("implied"),
        }
    }
}

impl FromStr for LoadingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "implied" {
            return Ok(LoadingMode::Implied);
        }
        let value = s
            .strip_prefix("fixed:")
            .ok_or_else(|| format!("loading must be `fixed:<x>` or `implied`, got `{s}`"))?;
        let x: f64 = value
            .parse()
            .map_err(|_| format!("loading value `{value}` is not a number"))?;
        if !(x.is_finite() && x > 0.0) {
            return Err(format!("fixed loading must be positive, got {x}"));
        }
        Ok(LoadingMode::Fixed(x))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key=value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("key `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub products: Vec<Product>,
    pub loading: LoadingMode,
    pub grid: Vec<f64>,
    pub n_paths: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Permutation replicates for the copula independence test.
    pub bootstrap: usize,
    pub out: PathBuf,
    pub monitoring: Monitoring,
    /// When set, a segment whose independence test has p-value above this
    /// level is simulated with the independence copula.
    pub copula_gate_alpha: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: PathBuf::from("claims.csv"),
            products: Product::ALL.to_vec(),
            loading: LoadingMode::Fixed(0.1),
            grid: (0..8).map(|i| f64::from(i) * 500.0).collect(),
            n_paths: 10_000,
            horizon: 60,
            seed: 1,
            bootstrap: 1000,
            out: PathBuf::from("out"),
            monitoring: Monitoring::PeriodEnd,
            copula_gate_alpha: None,
        }
    }
}

pub const CONFIG_KEYS: [&str; 11] = [
    "input",
    "products",
    "loading",
    "grid",
    "n_paths",
    "horizon",
    "seed",
    "bootstrap",
    "out",
    "monitoring",
    "copula_gate_alpha",
];

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("grid entry `{}` is not a number", t.trim()))
        })
        .collect()
}

pub fn parse_products(s: &str) -> Result<Vec<Product>, String> {
    s.split(',').map(|t| t.trim().parse()).collect()
}

impl PipelineConfig {
    /// Parses `key=value` lines over the defaults. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let key = key.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
            if seen.contains(&key) {
                return Err(ConfigError::DuplicateKey {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
            seen.push(key);
            cfg.set(key, value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::Value {
            key: key.to_string(),
            reason,
        };
        let int = |v: &str| v.parse::<u64>().map_err(|e| bad(e.to_string()));
        match key {
            "input" => self.input = PathBuf::from(value),
            "out" => self.out = PathBuf::from(value),
            "products" => self.products = parse_products(value).map_err(bad)?,
            "loading" => self.loading = value.parse().map_err(bad)?,
            "grid" => self.grid = parse_grid(value).map_err(bad)?,
            "n_paths" => self.n_paths = int(value)? as usize,
            "horizon" => self.horizon = int(value)? as usize,
            "seed" => self.seed = int(value)?,
            "bootstrap" => self.bootstrap = int(value)? as usize,
            "monitoring" => self.monitoring = value.parse().map_err(bad)?,
            "copula_gate_alpha" => {
                self.copula_gate_alpha = match value {
                    "" | "none" => None,
                    v => Some(
                        v.parse()
                            .map_err(|_| bad(format!("`{v}` is not a number")))?,
                    ),
                }
            }
            other => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: other.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.products.is_empty() {
            return invalid("no products selected".into());
        }
        for (i, p) in self.products.iter().enumerate() {
            if self.products[..i].contains(p) {
                return invalid(format!("product {p} listed twice"));
            }
        }
        if self.grid.is_empty() {
            return invalid("surplus grid is empty".into());
        }
        if self.grid.iter().any(|u| !(u.is_finite() && *u >= 0.0))
            || self.grid.windows(2).any(|w| w[0] >= w[1])
        {
            return invalid("surplus grid must be strictly ascending and non-negative".into());
        }
        if self.n_paths < MIN_PATHS {
            return invalid(format!("n_paths must be at least {MIN_PATHS}"));
        }
        if self.horizon == 0 {
            return invalid("horizon must be at least one period".into());
        }
        if self.bootstrap < 200 {
            return invalid("bootstrap must be at least 200".into());
        }
        if let Some(a) = self.copula_gate_alpha {
            if !(a > 0.0 && a < 1.0) {
                return invalid("copula_gate_alpha must lie in (0, 1)".into());
            }
        }
        Ok(())
    }

    /// Text form accepted by [`PipelineConfig::parse`].
    pub fn to_config_string(&self) -> String {
        let gate = self
            .copula_gate_alpha
            .map_or_else(|| "none".to_string(), |a| a.to_string());
        [
            ("input", self.input.display().to_string()),
            ("products", join(&self.products)),
            ("loading", self.loading.to_string()),
            ("grid", join(&self.grid)),
            ("n_paths", self.n_paths.to_string()),
            ("horizon", self.horizon.to_string()),
            ("seed", self.seed.to_string()),
            ("bootstrap", self.bootstrap.to_string()),
            ("out", self.out.display().to_string()),
            ("monitoring", self.monitoring.to_string()),
            ("copula_gate_alpha", gate),
        ]
        .iter()
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect()
    }
}

/// Pipeline stage, reported alongside failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Summary,
    FrequencyFit,
    SeverityFit,
    Dependence,
    RuinSimulation,
    RankTests,
    Output,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Summary => "summary",
            Stage::FrequencyFit => "frequency_fit",
            Stage::SeverityFit => "severity_fit",
            Stage::Dependence => "dependence",
            Stage::RuinSimulation => "ruin_simulation",
            Stage::RankTests => "rank_tests",
            Stage::Output => "output",
        }
    }

    /// Input and output problems exit with 1, numerical failures with 2.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config | Stage::Ingest | Stage::Output => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("{stage} failed{}: {message}", segment.as_ref().map(|s| format!(" for {s}")).unwrap_or_default())]
pub struct PipelineError {
    pub stage: Stage,
    pub segment: Option<String>,
    pub message: String,
}

impl PipelineError {
    fn new(stage: Stage, segment: Option<&str>, err: impl fmt::Display) -> Self {
        PipelineError {
            stage,
            segment: segment.map(str::to_string),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

/// Everything computed for one product or for the pooled book.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub segment: String,
    pub n_months: usize,
    pub premium: SummaryStats,
    pub claims_paid: SummaryStats,
    pub claim_count: SummaryStats,
    pub frequency: FrequencyFit,
    pub frequency_gof: GofResult,
    pub severity: SeverityFit,
    pub severity_gof: GofResult,
    /// Monthly claim count against mean claim size; drives the copula.
    pub dependence: DependenceReport,
    /// Monthly claim count against total claims paid.
    pub pearson_total_r: f64,
    pub pearson_total_p: f64,
    /// Gumbel parameter used by the dependent simulation.
    pub simulation_theta: f64,
    pub loading: f64,
    pub premium_per_period: f64,
    /// Adjustment coefficient of the independent model.
    pub adjustment_coefficient: Option<f64>,
    pub dependent: Vec<RuinEstimate>,
    pub independent: Vec<RuinEstimate>,
    /// Dependent against independent curve; `None` when the grid is too short.
    pub wilcoxon: Option<TestResult>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub first: String,
    pub second: String,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: PipelineConfig,
    /// Selected products in order, then the pooled segment.
    pub segments: Vec<SegmentReport>,
    /// Products compared on their dependent curves, grid points as blocks.
    pub friedman: Option<TestResult>,
    pub pairwise: Vec<PairwiseTest>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn segment(&self, label: &str) -> Option<&SegmentReport> {
        self.segments.iter().find(|s| s.segment == label)
    }
}

/// Pools the selected products month by month.
fn pool(records: &[&MonthlyRecord]) -> Vec<MonthlyRecord> {
    let mut periods: Vec<u32> = records.iter().map(|r| r.period).collect();
    periods.sort_unstable();
    periods.dedup();
    periods
        .into_iter()
        .map(|period| {
            let month = records.iter().filter(|r| r.period == period);
            let mut pooled = MonthlyRecord {
                period,
                product: Product::Motor,
                premium: 0.0,
                claims_paid: 0.0,
                claim_count: 0,
            };
            for r in month {
                pooled.premium += r.premium;
                pooled.claims_paid += r.claims_paid;
                pooled.claim_count += r.claim_count;
            }
            pooled
        })
        .collect()
}

/// Wilcoxon on two curves, with identical curves reported as `p = 1`.
fn curve_wilcoxon(a: &[f64], b: &[f64]) -> Result<Option<TestResult>, TestError> {
    if a.len() < 5 {
        return Ok(None);
    }
    match wilcoxon_signed_rank(a, b) {
        Ok(r) => Ok(Some(r)),
        Err(TestError::AllZeroDifferences) => Ok(Some(TestResult {
            statistic: 0.0,
            z_value: None,
            dof: None,
            p_value: 1.0,
            n_effective: 0,
            ranks_summary: Vec::new(),
        })),
        Err(e) => Err(e),
    }
}

fn psi(curve: &[RuinEstimate]) -> Vec<f64> {
    curve.iter().map(|e| e.psi_hat).collect()
}

fn analyze_segment(
    config: &PipelineConfig,
    label: &str,
    records: &[MonthlyRecord],
) -> Result<SegmentReport, PipelineError> {
    let err = |stage| move |e: &dyn fmt::Display| PipelineError::new(stage, Some(label), e);
    let mut warnings = Vec::new();

    let stats = |field| summarize(records, field).map_err(|e| err(Stage::Summary)(&e));
    let premium = stats(Field::Premium)?;
    let claims_paid = stats(Field::ClaimsPaid)?;
    let claim_count = stats(Field::ClaimCount)?;

    let counts: Vec<u64> = records.iter().map(|r| r.claim_count).collect();
    let totals: Vec<f64> = records.iter().map(|r| r.claims_paid).collect();
    let frequency = fit_poisson(&counts).map_err(|e| err(Stage::FrequencyFit)(&e))?;
    let frequency_gof =
        gof_poisson(&counts, &frequency).map_err(|e| err(Stage::FrequencyFit)(&e))?;
    let severity =
        fit_exponential_grouped(&totals, &counts).map_err(|e| err(Stage::SeverityFit)(&e))?;
    let severity_gof = gof_exponential_grouped(&totals, &counts, &severity, DEFAULT_SEVERITY_BINS)
        .map_err(|e| err(Stage::SeverityFit)(&e))?;

    let active: Vec<&MonthlyRecord> = records.iter().filter(|r| r.claim_count > 0).collect();
    let active_counts: Vec<f64> = active.iter().map(|r| r.claim_count as f64).collect();
    let mean_sizes: Vec<f64> = active.iter().filter_map(|r| r.mean_claim()).collect();
    let dependence = dependence_report(
        &active_counts,
        &mean_sizes,
        config.bootstrap,
        derive_seed(config.seed, &format!("dependence/{label}")),
    )
    .map_err(|e| err(Stage::Dependence)(&e))?;
    warnings.extend(dependence.warnings.iter().cloned());
    let all_counts: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (pearson_total_r, pearson_total_p) =
        pearson_correlation(&all_counts, &totals).map_err(|e| err(Stage::Dependence)(&e))?;

    let simulation_theta = match config.copula_gate_alpha {
        Some(alpha) if dependence.independence_p > alpha => {
            warnings.push(format!(
                "independence not rejected (p = {:.4} > {alpha}); dependent curve uses theta = 1",
                dependence.independence_p
            ));
            1.0
        }
        _ => dependence.gumbel_theta,
    };

    let loading = match config.loading {
        LoadingMode::Fixed(x) => x,
        LoadingMode::Implied => {
            let implied = premium.mean / claims_paid.mean - 1.0;
            if implied.is_finite() && implied >= LOADING_FLOOR {
                implied
            } else {
                warnings.push(format!(
                    "implied loading {implied:.4} is below {LOADING_FLOOR}; floored"
                ));
                LOADING_FLOOR
            }
        }
    };

    let model = RiskModel::new(frequency.lambda_hat, severity.rate_hat, loading)
        .with_copula_theta(simulation_theta)
        .with_horizon(config.horizon)
        .with_monitoring(config.monitoring);
    let ruin_seed = derive_seed(config.seed, &format!("ruin/{label}"));
    let curve = |assumption| {
        ruin_curve(&model, &config.grid, assumption, config.n_paths, ruin_seed)
            .map_err(|e| err(Stage::RuinSimulation)(&e))
    };
    let dependent = curve(Assumption::Dependent)?;
    let independent = curve(Assumption::Independent)?;
    let wilcoxon = curve_wilcoxon(&psi(&dependent), &psi(&independent))
        .map_err(|e| err(Stage::RankTests)(&e))?;
    if wilcoxon.is_none() {
        warnings.push("fewer than 5 grid points; Wilcoxon test skipped".into());
    }

    Ok(SegmentReport {
        segment: label.to_string(),
        n_months: records.len(),
        premium,
        claims_paid,
        claim_count,
        frequency,
        frequency_gof,
        severity,
        severity_gof,
        dependence,
        pearson_total_r,
        pearson_total_p,
        simulation_theta,
        loading,
        premium_per_period: premium_per_period(&model),
        adjustment_coefficient: adjustment_coefficient(&model).ok().map(|a| a.r),
        dependent,
        independent,
        wilcoxon,
        warnings,
    })
}

/// Runs every stage on records already in memory. Writes nothing.
pub fn analyze(
    config: &PipelineConfig,
    records: &[MonthlyRecord],
) -> Result<AnalysisReport, PipelineError> {
    config
        .validate()
        .map_err(|e| PipelineError::new(Stage::Config, None, e))?;

    let mut segments = Vec::new();
    let mut selected = Vec::new();
    for &product in &config.products {
        let mut rows: Vec<MonthlyRecord> = records
            .iter()
            .filter(|r| r.product == product)
            .cloned()
            .collect();
        if rows.is_empty() {
            return Err(PipelineError::new(
                Stage::Ingest,
                Some(product.as_str()),
                "no records for this product",
            ));
        }
        rows.sort_by_key(|r| r.period);
        segments.push(analyze_segment(config, product.as_str(), &rows)?);
        selected.extend(records.iter().filter(|r| r.product == product));
    }
    let pooled = pool(&selected);
    segments.push(analyze_segment(config, OVERALL, &pooled)?);

    let mut warnings = Vec::new();
    let products = &segments[..config.products.len()];
    let friedman = if products.len() >= 2 && config.grid.len() >= 2 {
        let blocks: Vec<Vec<f64>> = (0..config.grid.len())
            .map(|g| products.iter().map(|s| s.dependent[g].psi_hat).collect())
            .collect();
        match friedman(&blocks) {
            Ok(r) => Some(r),
            Err(TestError::Degenerate) => {
                warnings
                    .push("dependent curves tie at every grid point; Friedman test skipped".into());
                None
            }
            Err(e) => return Err(PipelineError::new(Stage::RankTests, None, e)),
        }
    } else {
        None
    };

    let mut pairwise = Vec::new();
    for (i, a) in products.iter().enumerate() {
        for b in &products[i + 1..] {
            let result = curve_wilcoxon(&psi(&a.dependent), &psi(&b.dependent))
                .map_err(|e| PipelineError::new(Stage::RankTests, None, e))?;
            if let Some(result) = result {
                pairwise.push(PairwiseTest {
                    first: a.segment.clone(),
                    second: b.segment.clone(),
                    result,
                });
            }
        }
    }

    Ok(AnalysisReport {
        config: config.clone(),
        segments,
        friedman,
        pairwise,
        warnings,
    })
}

/// Loads `config.input`, analyzes it and writes the tables to `config.out`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<AnalysisReport, PipelineError> {
    config
        .validate()
        .map_err(|e| PipelineError::new(Stage::Config, None, e))?;
    let records =
        load_claims_csv(&config.input).map_err(|e| PipelineError::new(Stage::Ingest, None, e))?;
    let report = analyze(config, &records)?;
    emit_tables(&report, &config.out)?;
    Ok(report)
}

fn opt<T: fmt::Display>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), PipelineError> {
    let io = |e: &dyn fmt::Display| PipelineError::new(Stage::Output, None, format!("{name}: {e}"));
    let mut w = csv::Writer::from_path(dir.join(name)).map_err(|e| io(&e))?;
    w.write_record(header).map_err(|e| io(&e))?;
    for row in rows {
        w.write_record(row).map_err(|e| io(&e))?;
    }
    w.flush().map_err(|e| io(&e))
}

/// Writes the report tables, the per-segment figure data and `report.json`.
pub fn emit_tables(report: &AnalysisReport, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir)
        .map_err(|e| PipelineError::new(Stage::Output, None, format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, header: &[&str], rows: Vec<Vec<String>>| {
        write_csv(dir, name, header, &rows)?;
        written.push(dir.join(name));
        Ok::<_, PipelineError>(())
    };

    let mut summary = Vec::new();
    for s in &report.segments {
        for (field, st) in [
            (Field::Premium, &s.premium),
            (Field::ClaimsPaid, &s.claims_paid),
            (Field::ClaimCount, &s.claim_count),
        ] {
            summary.push(vec![
                s.segment.clone(),
                field.as_str().to_string(),
                st.minimum.to_string(),
                st.maximum.to_string(),
                st.mean.to_string(),
                st.std_dev.to_string(),
            ]);
        }
    }
    emit(
        "summary.csv",
        &["segment", "field", "minimum", "maximum", "mean", "std_dev"],
        summary,
    )?;

    let fits = report
        .segments
        .iter()
        .map(|s| {
            vec![
                s.segment.clone(),
                s.frequency.lambda_hat.to_string(),
                s.frequency.std_error.to_string(),
                s.frequency_gof.statistic.to_string(),
                s.frequency_gof.dof.to_string(),
                s.frequency_gof.p_value.to_string(),
                s.severity.rate_hat.to_string(),
                s.severity.std_error.to_string(),
                s.severity_gof.statistic.to_string(),
                s.severity_gof.dof.to_string(),
                s.severity_gof.p_value.to_string(),
                s.loading.to_string(),
                s.premium_per_period.to_string(),
                opt(s.adjustment_coefficient),
            ]
        })
        .collect();
    emit(
        "fits.csv",
        &[
            "segment",
            "lambda_hat",
            "lambda_std_error",
            "frequency_chi2",
            "frequency_dof",
            "frequency_p_value",
            "rate_hat",
            "rate_std_error",
            "severity_chi2",
            "severity_dof",
            "severity_p_value",
            "loading",
            "premium",
            "adjustment_coefficient",
        ],
        fits,
    )?;

    let dependence = report
        .segments
        .iter()
        .map(|s| {
            let d = &s.dependence;
            vec![
                s.segment.clone(),
                s.pearson_total_r.to_string(),
                s.pearson_total_p.to_string(),
                d.pearson_r.to_string(),
                d.pearson_p.to_string(),
                d.kendall_tau.to_string(),
                d.gumbel_theta.to_string(),
                d.cvm_statistic.to_string(),
                d.independence_p.to_string(),
                s.simulation_theta.to_string(),
            ]
        })
        .collect();
    emit(
        "dependence.csv",
        &[
            "segment",
            "pearson_total_r",
            "pearson_total_p",
            "pearson_mean_size_r",
            "pearson_mean_size_p",
            "kendall_tau",
            "gumbel_theta",
            "cvm_statistic",
            "independence_p",
            "simulation_theta",
        ],
        dependence,
    )?;

    let mut curves = Vec::new();
    for s in &report.segments {
        for est in s.dependent.iter().chain(&s.independent) {
            curves.push(vec![
                s.segment.clone(),
                est.assumption.as_str().to_string(),
                est.u0.to_string(),
                est.psi_hat.to_string(),
                est.std_error.to_string(),
            ]);
        }
    }
    emit(
        "ruin_curves.csv",
        &["product", "assumption", "u0", "psi_hat", "std_error"],
        curves,
    )?;

    let test_row = |name: String, r: &TestResult| {
        vec![
            name,
            r.statistic.to_string(),
            opt(r.dof),
            r.p_value.to_string(),
        ]
    };
    let mut tests = Vec::new();
    for s in &report.segments {
        if let Some(w) = &s.wilcoxon {
            tests.push(test_row(
                format!("wilcoxon_dependent_vs_independent:{}", s.segment),
                w,
            ));
        }
    }
    if let Some(f) = &report.friedman {
        tests.push(test_row("friedman".into(), f));
    }
    for p in &report.pairwise {
        tests.push(test_row(
            format!("wilcoxon_pair:{}:{}", p.first, p.second),
            &p.result,
        ));
    }
    emit("tests.csv", &["test", "statistic", "dof", "p_value"], tests)?;

    for s in &report.segments {
        let rows = s
            .dependent
            .iter()
            .zip(&s.independent)
            .map(|(d, i)| {
                vec![
                    d.u0.to_string(),
                    d.psi_hat.to_string(),
                    i.psi_hat.to_string(),
                ]
            })
            .collect();
        emit(
            &format!("figure_{}.csv", s.segment),
            &["u0", "psi_dependent", "psi_independent"],
            rows,
        )?;
    }

    let json_path = dir.join("report.json");
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| PipelineError::new(Stage::Output, None, e))?;
    fs::write(&json_path, json + "\n")
        .map_err(|e| PipelineError::new(Stage::Output, None, format!("report.json: {e}")))?;
    written.push(json_path);
    Ok(written)
}
