use ruin_core::ingest::{write_claims_csv, MonthlyRecord, Product};
use ruin_core::pipeline::*;
use ruin_core::synthetic::{generate, SyntheticConfig};

fn quick(seed: u64) -> PipelineConfig {
    PipelineConfig {
        seed,
        n_paths: 1000,
        bootstrap: 200,
        ..PipelineConfig::default()
    }
}

#[test]
fn fitted_parameters_recover_generating_values() {
    let truth = SyntheticConfig::independent(101);
    let report = analyze(&quick(1), &generate(&truth)).unwrap();
    for spec in &truth.products {
        let s = report.segment(spec.product.as_str()).unwrap();
        assert!((s.frequency.lambda_hat - spec.lambda).abs() < 3.0 * s.frequency.std_error);
        assert!((s.severity.rate_hat - 1.0 / spec.mean_claim).abs() < 3.0 * s.severity.std_error);
    }
    let overall = report.segment(OVERALL).unwrap();
    let total: f64 = truth.products.iter().map(|p| p.lambda).sum();
    assert!((overall.frequency.lambda_hat - total).abs() < 3.0 * overall.frequency.std_error);
}

#[test]
fn independent_truth_rarely_separates_the_curves() {
    let mut cfg = quick(0);
    cfg.products = vec![Product::Motor];
    cfg.copula_gate_alpha = Some(0.05);
    let not_rejected = (0..100)
        .filter(|&seed| {
            cfg.seed = seed;
            let mut truth = SyntheticConfig::independent(seed);
            truth.products.truncate(1);
            let report = analyze(&cfg, &generate(&truth)).unwrap();
            report.segments[0].wilcoxon.as_ref().unwrap().p_value > 0.05
        })
        .count();
    assert!(not_rejected >= 90, "{not_rejected}/100");
}

#[test]
fn every_curve_has_one_entry_per_grid_point() {
    let mut cfg = quick(3);
    cfg.grid = vec![0.0, 10.0, 50.0, 300.0, 1000.0, 5000.0];
    let report = analyze(&cfg, &generate(&SyntheticConfig::three_products(3))).unwrap();
    assert_eq!(report.segments.len(), 4);
    for s in &report.segments {
        assert_eq!(s.dependent.len(), cfg.grid.len());
        assert_eq!(s.independent.len(), cfg.grid.len());
    }
    assert_eq!(report.pairwise.len(), 3);
    assert_eq!(report.friedman.as_ref().unwrap().dof, Some(2));
}

#[test]
fn implied_loading_is_floored() {
    let mut records = generate(&SyntheticConfig::three_products(4));
    for r in &mut records {
        r.premium = 1.0;
    }
    let mut cfg = quick(4);
    cfg.loading = LoadingMode::Implied;
    let report = analyze(&cfg, &records).unwrap();
    for s in &report.segments {
        assert_eq!(s.loading, LOADING_FLOOR);
        assert!(s.warnings.iter().any(|w| w.contains("floored")));
    }
}

#[test]
fn implied_loading_follows_premiums() {
    let records = generate(&SyntheticConfig::three_products(6));
    let mut cfg = quick(6);
    cfg.loading = LoadingMode::Implied;
    let report = analyze(&cfg, &records).unwrap();
    for s in &report.segments {
        let expected = s.premium.mean / s.claims_paid.mean - 1.0;
        assert!((s.loading - expected).abs() < 1e-12);
    }
}

#[test]
fn missing_product_is_an_ingest_error() {
    let records: Vec<MonthlyRecord> = generate(&SyntheticConfig::three_products(2))
        .into_iter()
        .filter(|r| r.product != Product::FireAllied)
        .collect();
    let err = analyze(&quick(2), &records).unwrap_err();
    assert_eq!(err.stage, Stage::Ingest);
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn unwritable_output_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let report = analyze(&quick(1), &generate(&SyntheticConfig::three_products(1))).unwrap();
    let err = emit_tables(&report, &blocker.join("out")).unwrap_err();
    assert_eq!(err.stage, Stage::Output);
}

#[test]
fn run_pipeline_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("claims.csv");
    write_claims_csv(
        std::fs::File::create(&input).unwrap(),
        &generate(&SyntheticConfig::three_products(9)),
    )
    .unwrap();
    let cfg = PipelineConfig {
        input,
        out: dir.path().join("out"),
        ..quick(9)
    };
    let snapshot = || {
        let mut files: Vec<(std::ffi::OsString, Vec<u8>)> = std::fs::read_dir(&cfg.out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    run_pipeline(&cfg).unwrap();
    let a = snapshot();
    run_pipeline(&cfg).unwrap();
    assert_eq!(a, snapshot());
    let names: Vec<String> = a
        .iter()
        .map(|(n, _)| n.to_string_lossy().into_owned())
        .collect();
    for f in [
        "figure_Motor.csv",
        "figure_Householders.csv",
        "figure_FireAllied.csv",
        "figure_Overall.csv",
    ] {
        assert!(names.contains(&f.to_string()));
    }
}

#[test]
fn report_json_round_trips() {
    let report = analyze(&quick(12), &generate(&SyntheticConfig::three_products(12))).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    let back: AnalysisReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
}
