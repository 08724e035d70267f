use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{Estimator, ExperimentConfig};
use super::real::{RealAnalysis, SampleFit};
use super::synthetic::{ReplicationKey, ReplicationRecord, ReplicationSeeds, ResultsTable, StudyReport};
use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::matrix::SymMatrix;

const NA: &str = "NA";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

fn json_bytes<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

/// Matrix as CSV with the variable names as header.
pub fn matrix_csv(m: &SymMatrix, names: &[String]) -> Result<Vec<u8>> {
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    csv_bytes(&header, (0..m.dim()).map(|i| m.row(i).iter().map(|v| v.to_string()).collect()))
}

pub fn adjacency_csv(a: &AdjacencyMatrix, names: &[String]) -> Result<Vec<u8>> {
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    csv_bytes(
        &header,
        (0..a.dim()).map(|i| (0..a.dim()).map(|j| u8::from(a.has_edge(i, j)).to_string()).collect()),
    )
}

/// Tab-separated `node_a node_b weight` lines, one per edge.
pub fn edge_list(a: &AdjacencyMatrix, names: &[String], weights: &SymMatrix) -> String {
    let mut out = String::from("node_a\tnode_b\tweight\n");
    for (i, j) in a.edges() {
        out.push_str(&format!("{}\t{}\t{}\n", names[i], names[j], weights.get(i, j)));
    }
    out
}

pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|k| format!("V{k}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskSeeds {
    #[serde(flatten)]
    pub key: ReplicationKey,
    pub seeds: ReplicationSeeds,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub tasks: Vec<TaskSeeds>,
    pub files: Vec<FileEntry>,
}

/// Collects files under one directory, tracking a digest of each for the
/// manifest.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(OutputDir {
            root,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// Writes `manifest.json` and returns the manifest.
    pub fn finish(mut self, command: &str, cfg: &ExperimentConfig, tasks: Vec<TaskSeeds>) -> Result<Manifest> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            tasks,
            files: self.files,
        };
        let path = self.root.join("manifest.json");
        fs::write(&path, json_bytes(&manifest)?).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

pub fn results_csv(table: &ResultsTable) -> Result<Vec<u8>> {
    csv_bytes(
        &["structure", "p", "n", "estimator", "metric", "count", "median", "mad", "bootstrap_se"],
        table.rows.iter().map(|r| {
            vec![
                r.structure.to_string(),
                r.dim.to_string(),
                r.n.to_string(),
                r.estimator.name().to_string(),
                r.metric.clone(),
                r.count.to_string(),
                fmt_opt(r.median),
                fmt_opt(r.mad),
                fmt_opt(r.bootstrap_se),
            ]
        }),
    )
}

pub fn replications_csv(records: &[ReplicationRecord]) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for rec in records {
        for est in [Estimator::Bnet, Estimator::Dnet] {
            let Some(s) = rec.scored(est) else { continue };
            let losses = crate::metrics::LossReport::NAMES.iter().zip(s.losses.values().map(Some));
            let scores = crate::metrics::ClassificationScores::NAMES.iter().zip(s.scores.values());
            for (name, v) in losses.chain(scores) {
                rows.push(vec![
                    rec.key.structure.to_string(),
                    rec.key.dim.to_string(),
                    rec.key.n.to_string(),
                    rec.key.replication.to_string(),
                    est.name().to_string(),
                    name.to_string(),
                    fmt_opt(v),
                ]);
            }
        }
    }
    csv_bytes(&["structure", "p", "n", "replication", "estimator", "metric", "value"], rows)
}

pub fn curves_csv(reports: &[StudyReport]) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for s in reports {
        for k in 0..s.report.grid.len() {
            rows.push(vec![
                s.structure.to_string(),
                s.dim.to_string(),
                s.n.to_string(),
                s.rule.to_string(),
                s.mode.to_string(),
                s.report.grid[k].to_string(),
                s.report.sparsity_error[k].to_string(),
                s.report.mcc[k].to_string(),
            ]);
        }
    }
    csv_bytes(
        &["structure", "p", "n", "rule", "mode", "eta", "median_sparsity_error", "median_mcc"],
        rows,
    )
}

fn task_seeds(records: &[ReplicationRecord]) -> Vec<TaskSeeds> {
    records
        .iter()
        .map(|r| TaskSeeds {
            key: r.key,
            seeds: r.seeds,
        })
        .collect()
}

#[derive(Serialize)]
struct UsedConfig<'a> {
    config: &'a ExperimentConfig,
    config_hash: String,
}

fn used_config(cfg: &ExperimentConfig) -> Result<Vec<u8>> {
    json_bytes(&UsedConfig {
        config: cfg,
        config_hash: cfg.hash(),
    })
}

/// Results table, per-replication values, sweep curves, edge lists, the
/// config actually used and the manifest.
pub fn emit_synthetic(
    dir: impl AsRef<Path>,
    cfg: &ExperimentConfig,
    records: &[ReplicationRecord],
    table: &ResultsTable,
    studies: &[StudyReport],
) -> Result<Manifest> {
    let mut out = OutputDir::create(dir)?;
    out.write("config.json", &used_config(cfg)?)?;
    out.write("results.csv", &results_csv(table)?)?;
    out.write("replications.csv", &replications_csv(records)?)?;
    if !studies.is_empty() {
        out.write("threshold_study.json", &json_bytes(studies)?)?;
        out.write("threshold_curves.csv", &curves_csv(studies)?)?;
    }
    for rec in records {
        let names = default_names(rec.key.dim);
        let stem = format!("edges/{}_p{}_n{}_r{}", rec.key.structure, rec.key.dim, rec.key.n, rec.key.replication);
        if let Some(b) = &rec.bnet {
            let text = edge_list(&b.network.adjacency, &names, &b.network.delta_hat);
            out.write(&format!("{stem}_bnet.txt"), text.as_bytes())?;
        }
        if let Some(d) = &rec.dnet {
            let text = edge_list(&d.scored.adjacency, &names, &d.path.selected_point().delta);
            out.write(&format!("{stem}_dnet.txt"), text.as_bytes())?;
        }
    }
    out.finish("synthetic", cfg, task_seeds(records))
}

pub fn emit_sweep(
    dir: impl AsRef<Path>,
    cfg: &ExperimentConfig,
    records: &[ReplicationRecord],
    studies: &[StudyReport],
) -> Result<Manifest> {
    let mut out = OutputDir::create(dir)?;
    out.write("config.json", &used_config(cfg)?)?;
    out.write("threshold_study.json", &json_bytes(studies)?)?;
    out.write("threshold_curves.csv", &curves_csv(studies)?)?;
    out.finish("sweep", cfg, task_seeds(records))
}

#[derive(Serialize)]
struct RealReport<'a> {
    groups: &'a [String; 2],
    sizes: [usize; 2],
    dropped_rows: usize,
    box_m: crate::data::BoxMResult,
    eta: f64,
    mode: crate::diffnet::CombineMode,
    rule: crate::diffnet::EdgeRule,
    edges: usize,
    warnings: &'a [String],
}

pub fn emit_real(dir: impl AsRef<Path>, cfg: &ExperimentConfig, res: &RealAnalysis) -> Result<Manifest> {
    let mut out = OutputDir::create(dir)?;
    let net = &res.network;
    out.write("config.json", &used_config(cfg)?)?;
    out.write("edges.txt", edge_list(&net.adjacency, &res.names, &net.delta_hat).as_bytes())?;
    out.write("adjacency.csv", &adjacency_csv(&net.adjacency, &res.names)?)?;
    out.write("delta.csv", &matrix_csv(&net.delta_hat, &res.names)?)?;
    for (k, c) in net.components.iter().enumerate() {
        out.write(&format!("precision_{}.csv", k + 1), &matrix_csv(&c.precision_mean, &res.names)?)?;
    }
    let report = RealReport {
        groups: &res.groups,
        sizes: res.sizes,
        dropped_rows: res.dropped_rows,
        box_m: res.box_m,
        eta: net.eta,
        mode: net.mode,
        rule: net.rule,
        edges: net.adjacency.edge_count(),
        warnings: &res.warnings,
    };
    out.write("report.json", &json_bytes(&report)?)?;
    out.finish("real", cfg, Vec::new())
}

pub fn emit_sample(dir: impl AsRef<Path>, cfg: &ExperimentConfig, fit: &SampleFit) -> Result<Manifest> {
    let mut out = OutputDir::create(dir)?;
    out.write("config.json", &used_config(cfg)?)?;
    out.write("precision.csv", &matrix_csv(&fit.precision_mean, &fit.names)?)?;
    out.write("partial_correlation.csv", &matrix_csv(&fit.partial_mean, &fit.names)?)?;
    out.write("wishart_partial_correlation.csv", &matrix_csv(&fit.eh, &fit.names)?)?;
    out.write("edges.txt", edge_list(&fit.adjacency, &fit.names, &fit.partial_mean).as_bytes())?;
    out.finish("sample", cfg, Vec::new())
}
