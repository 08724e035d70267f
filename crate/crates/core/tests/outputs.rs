use std::fs;
use std::path::Path;

use bnet::data::{write_csv, Dataset};
use bnet::gibbs::GibbsConfig;
use bnet::harness::config::{ExperimentConfig, GroupSpec, RealConfig};
use bnet::harness::output::{emit_real, emit_sweep, emit_synthetic};
use bnet::harness::synthetic::{results_table, run_replications, threshold_reports, ResultsTable, StudyReport};
use bnet::structures::{sample_gaussian, StructureKind};
use bnet::{DataMatrix, SymMatrix};
use chrono::NaiveDate;
use sha2::{Digest, Sha256};

fn tiny() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        seed: 11,
        replications: 2,
        structures: vec![StructureKind::Ar2],
        dims: vec![5],
        sample_sizes: vec![50],
        ..ExperimentConfig::default()
    };
    cfg.bnet.gibbs = GibbsConfig {
        burn_in: 50,
        retained: 100,
        ..GibbsConfig::default()
    };
    cfg.bnet.wishart_draws = 50;
    cfg
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn synthetic_outputs_are_listed_and_hashed() {
    let cfg = tiny();
    let records = run_replications(&cfg).unwrap();
    let table = results_table(&cfg, &records);
    let studies = threshold_reports(&cfg, &records).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_synthetic(dir.path(), &cfg, &records, &table, &studies).unwrap();

    let m = manifest(dir.path());
    assert_eq!(m["config_hash"], cfg.hash());
    assert_eq!(m["tasks"].as_array().unwrap().len(), 2);
    let files = m["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["path"] == "results.csv"));
    assert!(files.iter().any(|f| f["path"] == "edges/ar2_p5_n50_r0_dnet.txt"));
    for f in files {
        let bytes = fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"], hex::encode(Sha256::digest(&bytes)));
    }

    let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(text.starts_with("structure,p,n,estimator,metric,count,median,mad,bootstrap_se\n"));
    assert_eq!(text.lines().count(), 1 + table.rows.len());

    let json = fs::read(dir.path().join("threshold_study.json")).unwrap();
    let back: Vec<StudyReport> = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, studies);
}

#[test]
fn empty_table_still_writes_header_and_manifest() {
    let cfg = tiny();
    let dir = tempfile::tempdir().unwrap();
    emit_synthetic(dir.path(), &cfg, &[], &ResultsTable::default(), &[]).unwrap();
    let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(manifest(dir.path())["tasks"].as_array().unwrap().is_empty());
}

#[test]
fn sweep_output_round_trips() {
    let cfg = tiny();
    let records = run_replications(&ExperimentConfig {
        estimators: vec![bnet::harness::Estimator::Bnet],
        ..cfg.clone()
    })
    .unwrap();
    let studies = threshold_reports(&cfg, &records).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_sweep(dir.path(), &cfg, &records, &studies).unwrap();
    let back: Vec<StudyReport> =
        serde_json::from_slice(&fs::read(dir.path().join("threshold_study.json")).unwrap()).unwrap();
    assert_eq!(back, studies);
    let curves = fs::read_to_string(dir.path().join("threshold_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + studies.len() * cfg.grid.len());
}

/// Two calendar phases holding the same rows in the same order.
fn repeated_phases(dir: &Path) -> std::path::PathBuf {
    let x = sample_gaussian(&SymMatrix::identity(4), 60, 5).unwrap();
    let rows: Vec<Vec<f64>> = x.rows().chain(x.rows()).map(<[f64]>::to_vec).collect();
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let dates = (0..rows.len() as u64).map(|d| start + chrono::Days::new(d)).collect();
    let names = (1..=4).map(|k| format!("s{k}")).collect();
    let ds = Dataset::new(names, DataMatrix::from_rows(&rows).unwrap(), Some(dates)).unwrap();
    let path = dir.join("series.csv");
    write_csv(&path, &ds, "date").unwrap();
    path
}

#[test]
fn identical_phases_give_no_edges() {
    let dir = tempfile::tempdir().unwrap();
    let path = repeated_phases(dir.path());
    let real = RealConfig {
        path,
        read: bnet::data::ReadOptions {
            date_column: Some("date".into()),
            columns: None,
        },
        smoothing_window: None,
        nonparanormal: true,
        groups: GroupSpec::Phases {
            boundaries: vec!["2020-03-01".into()],
            names: Some(vec!["early".into(), "late".into()]),
            compare: ["early".into(), "late".into()],
        },
    };
    let mut cfg = tiny();
    cfg.real = Some(real.clone());
    let res = bnet::harness::run_real_analysis(&real, &cfg.bnet, cfg.eta).unwrap();
    assert_eq!(res.sizes, [60, 60]);
    assert_eq!(res.network.adjacency.edge_count(), 0);
    assert!(res.box_m.p_value > 0.999);

    let out = dir.path().join("out");
    emit_real(&out, &cfg, &res).unwrap();
    let edges = fs::read_to_string(out.join("edges.txt")).unwrap();
    assert_eq!(edges.lines().count(), 1);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["edges"], 0);
    for f in ["adjacency.csv", "delta.csv", "precision_1.csv", "precision_2.csv", "config.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}
