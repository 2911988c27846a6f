use powsec::harness::{
    catalog_entry, emit_results, parse_config, parse_config_str, read_csv, run_scenario,
    HarnessError, OutputFormat,
};

const SMALL: &str = r#"
name = "small"
repetitions = 12
seed_base = 100

[population]
n = 20
beta_rat = 0.2
beta_adv = 0.3

[run]
max_rounds = 1500

[strategies.rational]
kind = "rational-conditional"

[strategies.adversary]
kind = "selfish-mining-bribing"
z = 0.1
"#;

#[test]
fn aggregate_ignores_worker_count() {
    let spec = parse_config_str(SMALL, "small").unwrap();
    let a = run_scenario(&spec, 1).unwrap();
    let b = run_scenario(&spec, 4).unwrap();
    assert_eq!(a.summaries, b.summaries);
    assert_eq!(a.records.len(), 12);
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!(x.same_run(y));
    }
    let seeds: Vec<u64> = a.records.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, (100..112).collect::<Vec<_>>());
}

#[test]
fn violated_band_names_the_metric() {
    let text = format!("{SMALL}\n[expected]\nmetric = \"adv_block_share\"\nupper = 0.01\n");
    let spec = parse_config_str(&text, "band").unwrap();
    let rep = run_scenario(&spec, 2).unwrap();
    let v = rep.summaries[0].verdict.as_ref().unwrap();
    assert_eq!(v.metric, "adv_block_share");
    assert!(!v.pass);
    assert_eq!(rep.verdict(), Some(false));
}

#[test]
fn unknown_metric_is_rejected() {
    let text = format!("{SMALL}\n[expected]\nmetric = \"vibes\"\n");
    match parse_config_str(&text, "bad") {
        Err(HarnessError::Validation { field, .. }) => assert_eq!(field, "expected.metric"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn sweep_runs_every_point() {
    let text = format!(
        "{}\n[sweep]\npath = \"population.beta_adv\"\nstart = 0.1\nstop = 0.3\nstep = 0.1\n",
        SMALL.replace("repetitions = 12", "repetitions = 3")
    );
    let spec = parse_config_str(&text, "sweep").unwrap();
    let rep = run_scenario(&spec, 2).unwrap();
    let names: Vec<&str> = rep.summaries.iter().map(|s| s.scenario.as_str()).collect();
    assert_eq!(
        names,
        [
            "small[population.beta_adv=0.1]",
            "small[population.beta_adv=0.2]",
            "small[population.beta_adv=0.3]"
        ]
    );
    assert_eq!(rep.records.len(), 9);
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let spec = parse_config(&cfg).unwrap();
    let rep = run_scenario(&spec, 2).unwrap();
    let out = dir.path().join("r.csv");
    emit_results(&rep.records, &out, OutputFormat::Csv).unwrap();
    let back = read_csv(&out).unwrap();
    assert_eq!(back, rep.records);
}

#[test]
fn missing_file_is_an_io_error() {
    let e = parse_config(std::path::Path::new("/nonexistent/x.toml")).unwrap_err();
    assert!(matches!(e, HarnessError::Io { .. }));
}

#[test]
fn tx_gap_rows_cover_each_width() {
    let mut spec = catalog_entry("txwithhold-lemma1").unwrap().spec().unwrap();
    spec.repetitions = 50;
    let rep = run_scenario(&spec, 2).unwrap();
    let ls: Vec<Option<u32>> = rep.tx_gap.iter().map(|r| r.l).collect();
    assert_eq!(ls, [None, Some(4), Some(8), Some(12)]);
    // Without the filter withholding pays.
    assert!(rep.tx_gap[0].gap.mean > 0.0);
    assert_eq!(rep.records.len(), 4 * 2 * 50);
}
