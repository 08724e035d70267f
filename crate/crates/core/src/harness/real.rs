use chrono::NaiveDate;
use serde::Serialize;

use super::config::{GroupSpec, RealConfig};
use crate::data::{
    boxs_m_test, nonparanormal_transform, read_csv, smooth_dataset, split_phases, BoxMResult, Dataset,
};
use crate::diffnet::{estimate_bnet, DiffnetConfig, DifferentialNetwork};
use crate::error::{Error, Result};
use crate::gibbs::{summarize_chain, GibbsConfig};
use crate::matrix::{DataMatrix, SymMatrix};
use crate::wishart::{edge_rule_mean, posterior_partial_corr_mean, WishartSpec};
use crate::AdjacencyMatrix;

#[derive(Debug, Clone, Serialize)]
pub struct RealAnalysis {
    pub names: Vec<String>,
    pub groups: [String; 2],
    pub sizes: [usize; 2],
    pub dropped_rows: usize,
    pub box_m: BoxMResult,
    pub network: DifferentialNetwork,
    pub warnings: Vec<String>,
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|_| Error::Config(format!("invalid boundary date {s:?}")))
}

/// Group labels, the two data blocks, variable names and split warnings.
type Groups = ([String; 2], [DataMatrix; 2], Vec<String>, Vec<String>);

/// Splits the rows into the two groups to contrast.
fn two_groups(ds: &Dataset, groups: &GroupSpec) -> Result<Groups> {
    match groups {
        GroupSpec::Phases {
            boundaries,
            names,
            compare,
        } => {
            let dates = boundaries.iter().map(|b| parse_date(b)).collect::<Result<Vec<_>>>()?;
            let split = split_phases(ds, &dates, names.as_deref())?;
            let pick = |name: &str| {
                split
                    .get(name)
                    .ok_or_else(|| Error::Config(format!("no phase named `{name}`")))
                    .map(|p| ds.values.slice_rows(p.start, p.end))
            };
            Ok((
                compare.clone(),
                [pick(&compare[0])?, pick(&compare[1])?],
                ds.names.clone(),
                split.warnings,
            ))
        }
        GroupSpec::Class { column, first, second } => {
            let idx = ds
                .names
                .iter()
                .position(|n| n == column)
                .ok_or_else(|| Error::Config(format!("no column named `{column}`")))?;
            let keep: Vec<usize> = (0..ds.ncols()).filter(|&j| j != idx).collect();
            let rows_for = |label: f64| -> Result<DataMatrix> {
                let rows: Vec<Vec<f64>> = ds
                    .values
                    .rows()
                    .filter(|r| r[idx] == label)
                    .map(|r| keep.iter().map(|&j| r[j]).collect())
                    .collect();
                if rows.is_empty() {
                    return Err(Error::Config(format!("no rows with {column} = {label}")));
                }
                DataMatrix::from_rows(&rows)
            };
            let names = keep.iter().map(|&j| ds.names[j].clone()).collect();
            Ok((
                [format!("{column}={first}"), format!("{column}={second}")],
                [rows_for(*first)?, rows_for(*second)?],
                names,
                Vec::new(),
            ))
        }
    }
}

/// Reads, smooths, Gaussianizes, splits, tests covariance homogeneity and
/// estimates the DN between the two configured groups.
pub fn run_real_analysis(real: &RealConfig, bnet: &DiffnetConfig, eta: f64) -> Result<RealAnalysis> {
    let mut ds = read_csv(&real.path, &real.read)?;
    let dropped_rows = ds.dropped;
    if let Some(w) = real.smoothing_window {
        ds = smooth_dataset(&ds, w)?;
    }
    let (groups, [mut x1, mut x2], names, warnings) = two_groups(&ds, &real.groups)?;
    if real.nonparanormal {
        x1 = nonparanormal_transform(&x1, &names).map_err(|e| e.context(groups[0].clone()))?;
        x2 = nonparanormal_transform(&x2, &names).map_err(|e| e.context(groups[1].clone()))?;
    }
    let box_m = boxs_m_test(&x1.covariance(), x1.nrows(), &x2.covariance(), x2.nrows())?;
    let network = estimate_bnet(&x1, &x2, bnet, eta)?;
    Ok(RealAnalysis {
        names,
        groups,
        sizes: [x1.nrows(), x2.nrows()],
        dropped_rows,
        box_m,
        network,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleFit {
    pub names: Vec<String>,
    pub n: usize,
    pub precision_mean: SymMatrix,
    pub partial_mean: SymMatrix,
    pub eh: SymMatrix,
    pub adjacency: AdjacencyMatrix,
    pub eta: f64,
}

/// One sampler chain on one dataset, with the mean-rule graph at `eta`.
pub fn run_sample(ds: &Dataset, gibbs: &GibbsConfig, epsilon: f64, draws: usize, eta: f64) -> Result<SampleFit> {
    let scatter = ds.values.scatter();
    let n = ds.nrows();
    let chain = summarize_chain(&scatter, n, gibbs)?;
    let eh = posterior_partial_corr_mean(&WishartSpec::posterior(&scatter, n, epsilon)?, draws, gibbs.seed)?;
    Ok(SampleFit {
        names: ds.names.clone(),
        n,
        adjacency: edge_rule_mean(&eh, eta),
        precision_mean: chain.precision_mean,
        partial_mean: chain.partial_mean,
        eh,
        eta,
    })
}
