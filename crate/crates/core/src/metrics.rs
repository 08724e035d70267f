//! Matrix and spectral losses for a DN estimate, and edge-classification
//! scores for its graph.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::AdjacencyMatrix;
use crate::matrix::{eigenvalues_sym, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l1: f64,
    pub l2: f64,
    pub el1: f64,
    pub el2: f64,
    pub maxel1: f64,
    pub minel1: f64,
}

impl LossReport {
    pub const NAMES: [&'static str; 6] = ["L1", "L2", "EL1", "EL2", "MAXEL1", "MINEL1"];

    pub fn values(&self) -> [f64; 6] {
        [self.l1, self.l2, self.el1, self.el2, self.maxel1, self.minel1]
    }
}

/// Maximum absolute column sum and Frobenius norm of `est − truth`.
pub fn matrix_losses(est: &SymMatrix, truth: &SymMatrix) -> Result<(f64, f64)> {
    let d = est.sub(truth)?;
    let p = d.dim();
    let l1 = (0..p)
        .map(|j| (0..p).map(|i| d.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok((l1, d.frobenius()))
}

/// Returns `(el1, el2, maxel1, minel1)` with eigenvalues paired in ascending
/// order.
pub fn eigen_losses(est: &SymMatrix, truth: &SymMatrix) -> Result<(f64, f64, f64, f64)> {
    est.check_dim(truth.dim())?;
    let a = eigenvalues_sym(est);
    let b = eigenvalues_sym(truth);
    let p = a.len() as f64;
    let el1 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / p;
    let el2 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / p;
    let maxel1 = (a[a.len() - 1] - b[b.len() - 1]).abs();
    let minel1 = (a[0] - b[0]).abs();
    Ok((el1, el2, maxel1, minel1))
}

pub fn losses(est: &SymMatrix, truth: &SymMatrix) -> Result<LossReport> {
    let (l1, l2) = matrix_losses(est, truth)?;
    let (el1, el2, maxel1, minel1) = eigen_losses(est, truth)?;
    Ok(LossReport {
        l1,
        l2,
        el1,
        el2,
        maxel1,
        minel1,
    })
}

/// Counts over the upper triangle only; the diagonal is never scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(est: &AdjacencyMatrix, truth: &AdjacencyMatrix) -> Result<ConfusionCounts> {
    est.check_dim(truth.dim())?;
    let mut c = ConfusionCounts::default();
    for (&e, &t) in est.upper_triangle().iter().zip(truth.upper_triangle()) {
        match (e, t) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Classification scores. `None` marks a ratio whose denominator is zero,
/// reported as "NA" in tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub sp: Option<f64>,
    pub se: Option<f64>,
    pub fnr: Option<f64>,
    pub f1: Option<f64>,
    pub mcc: Option<f64>,
}

impl ClassificationScores {
    pub const NAMES: [&'static str; 5] = ["SP", "SE", "FNR", "F1", "MCC"];

    pub fn values(&self) -> [Option<f64>; 5] {
        [self.sp, self.se, self.fnr, self.f1, self.mcc]
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

pub fn classification_scores(c: &ConfusionCounts) -> ClassificationScores {
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let mcc_den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    ClassificationScores {
        sp: ratio(tn, tn + fp),
        se: ratio(tp, tp + fn_),
        fnr: ratio(fn_, fn_ + tp),
        f1: ratio(tp, tp + 0.5 * (fp + fn_)),
        mcc: ratio(tp * tn - fp * fn_, mcc_den),
    }
}

/// Median of the finite values; `None` when there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Median absolute deviation about the median (unscaled).
pub fn mad(values: &[f64]) -> Option<f64> {
    let m = median(values)?;
    let dev: Vec<f64> = values
        .iter()
        .filter(|x| x.is_finite())
        .map(|x| (x - m).abs())
        .collect();
    median(&dev)
}
