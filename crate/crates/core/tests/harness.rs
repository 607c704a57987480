use jpac::bench::{
    emit, generate_instance, run_benchmark, run_benchmark_with, summary_csv, trial_seed, trials_csv, Algorithm,
    BenchConfig, InstanceConfig, Outcome, OutputFormat, TrialStatus, SUMMARY_HEADER, TRIALS_HEADER,
};
use jpac::Error;

fn small(k_list: Vec<usize>, trials: usize) -> BenchConfig {
    BenchConfig {
        instance: InstanceConfig {
            seed: 42,
            ..InstanceConfig::default()
        },
        k_list,
        trials,
        algorithms: vec![Algorithm::Nlpd, Algorithm::Pnmd, Algorithm::Oracle],
        ..BenchConfig::default()
    }
}

#[test]
fn row_and_summary_counts() {
    let cfg = small(vec![3, 5], 4);
    let mut streamed = 0;
    let report = run_benchmark(&cfg, |_| streamed += 1).unwrap();
    assert_eq!(report.rows.len(), 2 * 4 * 3);
    assert_eq!(streamed, report.rows.len());
    for &k in &cfg.k_list {
        for &a in &cfg.algorithms {
            assert_eq!(report.rows_for(k, a).count(), 4);
        }
    }
    let summary = report.summary();
    assert_eq!(summary.len(), 2 * 3);
    assert_eq!(summary_csv(&report).lines().count(), 1 + 6);
    assert_eq!(summary_csv(&report).lines().next(), Some(SUMMARY_HEADER));
    assert_eq!(trials_csv(&report).lines().next(), Some(TRIALS_HEADER));
}

#[test]
fn summary_means_recompute_from_rows() {
    let report = run_benchmark(&small(vec![6], 10), |_| {}).unwrap();
    for s in report.summary() {
        let rows: Vec<_> = report.rows_for(s.k, s.algorithm).collect();
        let links = rows.iter().map(|r| r.supported as f64).sum::<f64>() / rows.len() as f64;
        let power = rows.iter().map(|r| r.total_power_w).sum::<f64>() / rows.len() as f64;
        assert!((s.mean_supported - links).abs() <= 1e-12 * links.abs().max(1.0));
        assert!((s.mean_power_w - power).abs() <= 1e-12 * power.abs().max(1e-300));
        assert_eq!(s.n, rows.len());
    }
}

#[test]
fn algorithms_see_the_same_instance() {
    let report = run_benchmark(&small(vec![5], 6), |_| {}).unwrap();
    for t in 0..6 {
        let seeds: Vec<u64> = report.rows.iter().filter(|r| r.trial == t).map(|r| r.seed).collect();
        assert_eq!(seeds.len(), 3);
        assert!(seeds.iter().all(|&s| s == trial_seed(42, 5, t)));
    }
    let oracle: Vec<_> = report.rows_for(5, Algorithm::Oracle).collect();
    for a in [Algorithm::Nlpd, Algorithm::Pnmd] {
        for (r, o) in report.rows_for(5, a).zip(&oracle) {
            assert!(r.supported <= o.supported);
        }
    }
}

#[test]
fn forced_failure_is_recorded_and_excluded() {
    let cfg = BenchConfig {
        algorithms: vec![Algorithm::Nlpd],
        ..small(vec![4], 5)
    };
    let report = run_benchmark_with(
        &cfg,
        |_, net| {
            if net.gains()[(0, 0)]
                == generate_instance(&cfg.instance, 4, trial_seed(42, 4, 2))
                    .unwrap()
                    .gains()[(0, 0)]
            {
                Err(Error::Config("forced".into()))
            } else {
                Ok(Outcome {
                    supported: 1,
                    total_power_w: 2.0,
                })
            }
        },
        |_| {},
    )
    .unwrap();
    let failed: Vec<_> = report.rows.iter().filter(|r| r.status == TrialStatus::Failed).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].trial, 2);
    let s = &report.summary()[0];
    assert_eq!(s.n, 4);
    assert_eq!(s.mean_supported, 1.0);
    assert_eq!(s.mean_power_w, 2.0);
    assert!(trials_csv(&report)
        .lines()
        .any(|l| l.starts_with("4,nlpd,2,") && l.ends_with(",failed")));
}

#[test]
fn empty_sweep_is_empty() {
    let report = run_benchmark(&small(vec![], 10), |_| {}).unwrap();
    assert!(report.rows.is_empty());
    assert!(report.summary().is_empty());
    assert_eq!(trials_csv(&report), format!("{TRIALS_HEADER}\n"));
}

#[test]
fn parallel_matches_serial() {
    let serial = run_benchmark(&small(vec![4, 7], 6), |_| {}).unwrap();
    let parallel = run_benchmark(
        &BenchConfig {
            jobs: 4,
            ..small(vec![4, 7], 6)
        },
        |_| {},
    )
    .unwrap();
    assert_eq!(trials_csv(&serial), trials_csv(&parallel));
}

#[test]
fn oracle_refuses_large_networks() {
    assert!(run_benchmark(&small(vec![17], 1), |_| {}).is_err());
}

#[test]
fn emit_writes_files_and_reports_bad_paths() {
    let report = run_benchmark(&small(vec![3], 2), |_| {}).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit(&report, OutputFormat::CsvAndJson, dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let first = std::fs::read(dir.path().join("trials.csv")).unwrap();
    emit(&report, OutputFormat::Csv, dir.path()).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("trials.csv")).unwrap());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["summary"].as_array().unwrap().len(), 3);

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    assert!(matches!(
        emit(&report, OutputFormat::Csv, &blocker.join("sub")),
        Err(Error::Io(_))
    ));
}
