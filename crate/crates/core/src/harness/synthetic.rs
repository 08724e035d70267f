use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Estimator, ExperimentConfig};
use crate::diffnet::{estimate_bnet_seeded, CombineMode, DifferentialNetwork, EdgeRule};
use crate::dnet::{estimate_dnet, SolutionPath};
use crate::error::Result;
use crate::graph::AdjacencyMatrix;
use crate::matrix::SymMatrix;
use crate::metrics::{
    classification_scores, confusion, losses, mad, median, ClassificationScores, LossReport,
};
use crate::structures::{make_structure, sample_gaussian, ModelPair, StructureKind, StructureSpec};
use crate::wishart::{threshold_sweep, ThresholdReport};

/// One finalizer step of SplitMix64.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Base seed of one replication: the master seed folded with the structure
/// number, the dimension index and the replication index, one SplitMix64
/// step per component.
pub fn replication_seed(master: u64, structure: usize, dim_index: usize, replication: usize) -> u64 {
    [structure as u64, dim_index as u64, replication as u64]
        .into_iter()
        .fold(mix64(master), |acc, part| mix64(acc ^ mix64(part)))
}

/// Independent streams hanging off one replication seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationSeeds {
    pub base: u64,
    pub structure: u64,
    pub samples: [u64; 2],
    pub chains: [u64; 2],
}

impl ReplicationSeeds {
    pub fn derive(base: u64) -> Self {
        let stream = |k: u64| mix64(base ^ mix64(k));
        ReplicationSeeds {
            base,
            structure: stream(1),
            samples: [stream(2), stream(3)],
            chains: [stream(4), stream(5)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReplicationKey {
    pub structure: StructureKind,
    pub dim: usize,
    pub n: usize,
    pub replication: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scored {
    pub losses: LossReport,
    pub scores: ClassificationScores,
    pub adjacency: AdjacencyMatrix,
}

/// Losses of `delta_hat` and graph scores of `adjacency` against the truth.
pub fn score_estimate(
    delta_hat: &SymMatrix,
    adjacency: &AdjacencyMatrix,
    truth: &ModelPair,
) -> Result<Scored> {
    Ok(Scored {
        losses: losses(delta_hat, &truth.true_delta)?,
        scores: classification_scores(&confusion(adjacency, &truth.true_adjacency)?),
        adjacency: adjacency.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct BnetRecord {
    pub network: DifferentialNetwork,
    pub scored: Scored,
    /// Sweep for each edge rule under the configured combine mode.
    pub sweeps: Vec<(EdgeRule, ThresholdReport)>,
}

#[derive(Debug, Clone)]
pub struct DnetRecord {
    pub path: SolutionPath,
    pub scored: Scored,
}

#[derive(Debug, Clone)]
pub struct ReplicationRecord {
    pub key: ReplicationKey,
    pub seeds: ReplicationSeeds,
    pub truth: ModelPair,
    pub bnet: Option<BnetRecord>,
    pub dnet: Option<DnetRecord>,
}

impl ReplicationRecord {
    pub fn scored(&self, est: Estimator) -> Option<&Scored> {
        match est {
            Estimator::Bnet => self.bnet.as_ref().map(|b| &b.scored),
            Estimator::Dnet => self.dnet.as_ref().map(|d| &d.scored),
        }
    }
}

/// Every `(structure, dimension, replication)` task, in output order.
pub fn task_keys(cfg: &ExperimentConfig) -> Vec<(ReplicationKey, u64)> {
    let mut keys = Vec::new();
    for &kind in &cfg.structures {
        for (d, (dim, n)) in cfg.cells().enumerate() {
            for r in 0..cfg.replications {
                let key = ReplicationKey {
                    structure: kind,
                    dim,
                    n,
                    replication: r,
                };
                keys.push((key, replication_seed(cfg.seed, kind.number(), d, r)));
            }
        }
    }
    keys
}

pub fn run_replication(cfg: &ExperimentConfig, key: ReplicationKey, base: u64) -> Result<ReplicationRecord> {
    let seeds = ReplicationSeeds::derive(base);
    let spec = StructureSpec::new(key.structure, key.dim).with_seed(seeds.structure);
    let truth = make_structure(&spec)?;
    let x1 = sample_gaussian(&truth.theta1, key.n, seeds.samples[0])?;
    let x2 = sample_gaussian(&truth.theta2, key.n, seeds.samples[1])?;

    let bnet = if cfg.estimators.contains(&Estimator::Bnet) {
        let network = estimate_bnet_seeded(&x1, &x2, &cfg.bnet, cfg.eta, seeds.chains)?;
        let scored = score_estimate(&network.delta_hat, &network.adjacency, &truth)?;
        let sweeps = EdgeRule::ALL
            .into_iter()
            .map(|rule| {
                let report = threshold_sweep(
                    &truth.true_adjacency,
                    |eta| network.adjacency_at(eta, cfg.bnet.mode, rule),
                    &cfg.grid,
                )?;
                Ok((rule, report))
            })
            .collect::<Result<Vec<_>>>()?;
        Some(BnetRecord {
            network,
            scored,
            sweeps,
        })
    } else {
        None
    };

    let dnet = if cfg.estimators.contains(&Estimator::Dnet) {
        let path = estimate_dnet(&x1, &x2, &cfg.dnet)?;
        let scored = score_estimate(&path.selected_point().delta, &path.adjacency(), &truth)?;
        Some(DnetRecord { path, scored })
    } else {
        None
    };

    Ok(ReplicationRecord {
        key,
        seeds,
        truth,
        bnet,
        dnet,
    })
}

/// Runs every replication in parallel; the result is in task order whatever
/// the thread count.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<Vec<ReplicationRecord>> {
    cfg.validate()?;
    task_keys(cfg)
        .into_par_iter()
        .map(|(key, base)| {
            run_replication(cfg, key, base).map_err(|e| {
                e.context(format!(
                    "{} p={} replication {}",
                    key.structure, key.dim, key.replication
                ))
            })
        })
        .collect()
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub structure: StructureKind,
    pub dim: usize,
    pub n: usize,
    pub estimator: Estimator,
    pub metric: String,
    /// Replications with a defined value.
    pub count: usize,
    pub median: Option<f64>,
    pub mad: Option<f64>,
    /// Bootstrap standard error of the median.
    pub bootstrap_se: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn get(&self, structure: StructureKind, dim: usize, est: Estimator, metric: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.structure == structure && r.dim == dim && r.estimator == est && r.metric == metric)
    }
}

/// Standard deviation of the median over resamples drawn with `rng`.
pub fn bootstrap_median_se(values: &[f64], resamples: usize, rng: &mut impl Rng) -> Option<f64> {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.len() < 2 || resamples < 2 {
        return None;
    }
    let meds: Vec<f64> = (0..resamples)
        .map(|_| {
            let draw: Vec<f64> = (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).collect();
            median(&draw).expect("non-empty")
        })
        .collect();
    let m = meds.iter().sum::<f64>() / resamples as f64;
    let var = meds.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Some(var.sqrt())
}

fn metric_values(s: &Scored) -> Vec<(&'static str, Option<f64>)> {
    let mut out: Vec<(&'static str, Option<f64>)> = LossReport::NAMES
        .iter()
        .zip(s.losses.values())
        .map(|(&n, v)| (n, Some(v)))
        .collect();
    out.extend(ClassificationScores::NAMES.iter().zip(s.scores.values()).map(|(&n, v)| (n, v)));
    out
}

/// Median, MAD and bootstrap SE per `(structure, p, estimator, metric)`.
pub fn results_table(cfg: &ExperimentConfig, records: &[ReplicationRecord]) -> ResultsTable {
    let mut rows = Vec::new();
    for &kind in &cfg.structures {
        for (d, (dim, n)) in cfg.cells().enumerate() {
            let cell: Vec<&ReplicationRecord> = records
                .iter()
                .filter(|r| r.key.structure == kind && r.key.dim == dim && r.key.n == n)
                .collect();
            for &est in &cfg.estimators {
                let per_rep: Vec<Vec<(&str, Option<f64>)>> =
                    cell.iter().filter_map(|r| r.scored(est)).map(metric_values).collect();
                let Some(first) = per_rep.first() else { continue };
                for (m, &(name, _)) in first.iter().enumerate() {
                    let values: Vec<f64> = per_rep.iter().filter_map(|v| v[m].1).collect();
                    let seed = replication_seed(cfg.seed ^ 0xB007, kind.number(), d, m * 2 + est as usize);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rows.push(ResultRow {
                        structure: kind,
                        dim,
                        n,
                        estimator: est,
                        metric: name.to_string(),
                        count: values.len(),
                        median: median(&values),
                        mad: mad(&values),
                        bootstrap_se: bootstrap_median_se(&values, BOOTSTRAP_RESAMPLES, &mut rng),
                    });
                }
            }
        }
    }
    ResultsTable { rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub structure: StructureKind,
    pub dim: usize,
    pub n: usize,
    pub rule: EdgeRule,
    pub mode: CombineMode,
    /// Median curves over replications and the best threshold on them.
    pub report: ThresholdReport,
    /// Best threshold of each replication's own sweep.
    pub replication_best_eta: Vec<f64>,
}

/// Per structure, dimension and edge rule: median sparsity error and MCC at
/// each threshold.
pub fn threshold_reports(cfg: &ExperimentConfig, records: &[ReplicationRecord]) -> Result<Vec<StudyReport>> {
    let mut out = Vec::new();
    for &kind in &cfg.structures {
        for (dim, n) in cfg.cells() {
            for rule in EdgeRule::ALL {
                let sweeps: Vec<&ThresholdReport> = records
                    .iter()
                    .filter(|r| r.key.structure == kind && r.key.dim == dim && r.key.n == n)
                    .filter_map(|r| r.bnet.as_ref())
                    .filter_map(|b| b.sweeps.iter().find(|(r, _)| *r == rule).map(|(_, s)| s))
                    .collect();
                if sweeps.is_empty() {
                    continue;
                }
                let column = |k: usize, f: fn(&ThresholdReport) -> &Vec<f64>| {
                    median(&sweeps.iter().map(|s| f(s)[k]).collect::<Vec<_>>()).unwrap_or(f64::NAN)
                };
                let sparsity = (0..cfg.grid.len()).map(|k| column(k, |s| &s.sparsity_error)).collect();
                let mcc = (0..cfg.grid.len()).map(|k| column(k, |s| &s.mcc)).collect();
                out.push(StudyReport {
                    structure: kind,
                    dim,
                    n,
                    rule,
                    mode: cfg.bnet.mode,
                    report: ThresholdReport::from_curves(cfg.grid.clone(), sparsity, mcc)?,
                    replication_best_eta: sweeps.iter().map(|s| s.best_eta).collect(),
                });
            }
        }
    }
    Ok(out)
}

pub fn run_synthetic_experiment(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    Ok(results_table(cfg, &run_replications(cfg)?))
}

/// Threshold sweeps for the B-net rules; other estimators are skipped.
pub fn run_threshold_study(cfg: &ExperimentConfig) -> Result<Vec<StudyReport>> {
    let cfg = ExperimentConfig {
        estimators: vec![Estimator::Bnet],
        ..cfg.clone()
    };
    threshold_reports(&cfg, &run_replications(&cfg)?)
}
