//! Wishart posterior sampling and the partial-correlation thresholding rules
//! used to turn posterior summaries into graphs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::matrix::{cholesky_pd, invert_pd, partial_correlation_unchecked, PdFactor, SymMatrix};
use crate::metrics::{classification_scores, confusion};
use crate::variates::{sample_gamma, std_normal};

/// Ridge added to the scatter matrix in the sharp (`h`) posterior.
pub const DEFAULT_EPSILON: f64 = 0.001;
/// Prior degrees of freedom for both reference posteriors.
pub const PRIOR_DOF: f64 = 3.0;
/// Floor on `|E_g(ρij | Y)|` in the ratio rule.
pub const RATIO_FLOOR: f64 = 1e-8;
pub const DEFAULT_DRAWS: usize = 1000;

/// Draws per parallel work unit. Fixed so that summation order, and hence
/// every bit of the result, does not depend on the thread count.
const CHUNK: usize = 64;

#[derive(Debug, Clone)]
pub struct WishartSpec {
    dof: f64,
    scale: SymMatrix,
    factor: PdFactor,
}

impl WishartSpec {
    pub fn new(dof: f64, scale: SymMatrix) -> Result<Self> {
        if !(dof >= scale.dim() as f64) || !dof.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Wishart degrees of freedom {dof} below dimension {}",
                scale.dim()
            )));
        }
        let factor = cholesky_pd(&scale)?;
        Ok(WishartSpec { dof, scale, factor })
    }

    /// Conjugate posterior `W(3 + n, (S + εI)⁻¹)` of the `W(3, εI)` prior.
    pub fn posterior(scatter: &SymMatrix, n: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        let scale = invert_pd(&scatter.shift_diag(epsilon))?;
        Self::new(PRIOR_DOF + n as f64, scale)
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn scale(&self) -> &SymMatrix {
        &self.scale
    }

    pub fn mean(&self) -> SymMatrix {
        self.scale.scale(self.dof)
    }

    /// One draw by the Bartlett decomposition `W = (L A)(L A)ᵀ`.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> SymMatrix {
        let p = self.scale.dim();
        let mut a = vec![0.0; p * p];
        for i in 0..p {
            let chi2 = 2.0
                * sample_gamma((self.dof - i as f64) / 2.0, 1.0, rng)
                    .expect("dof >= p keeps the shape positive");
            a[i * p + i] = chi2.sqrt();
            for j in 0..i {
                a[i * p + j] = std_normal(rng);
            }
        }
        // B = L A, both lower triangular.
        let mut b = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..=i {
                b[i * p + j] = (j..=i).map(|k| self.factor.l(i, k) * a[k * p + j]).sum();
            }
        }
        SymMatrix::from_fn(p, |i, j| {
            (0..=i.min(j)).map(|k| b[i * p + k] * b[j * p + k]).sum()
        })
    }
}

fn draw_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `count` independent draws. Draw `k` uses its own stream derived from
/// `seed`, so the output is the same however the work is scheduled.
pub fn sample_wishart(spec: &WishartSpec, count: usize, seed: u64) -> Vec<SymMatrix> {
    (0..count)
        .into_par_iter()
        .map(|k| spec.sample(&mut draw_rng(seed, k)))
        .collect()
}

/// Monte Carlo mean of a matrix functional of the draws.
fn draw_mean(
    spec: &WishartSpec,
    count: usize,
    seed: u64,
    f: impl Fn(&SymMatrix) -> SymMatrix + Sync,
) -> Result<SymMatrix> {
    if count == 0 {
        return Err(Error::Empty("need at least one Wishart draw"));
    }
    let chunks: Vec<SymMatrix> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = SymMatrix::zeros(spec.scale.dim());
            for k in (c * CHUNK)..((c + 1) * CHUNK).min(count) {
                let w = spec.sample(&mut draw_rng(seed, k));
                acc = acc.add(&f(&w)).expect("same dimension");
            }
            acc
        })
        .collect();
    let mut total = SymMatrix::zeros(spec.scale.dim());
    for c in &chunks {
        total = total.add(c)?;
    }
    Ok(total.scale(1.0 / count as f64))
}

/// Monte Carlo estimate of `E(ρ | Y)` under the given Wishart.
pub fn posterior_partial_corr_mean(spec: &WishartSpec, count: usize, seed: u64) -> Result<SymMatrix> {
    draw_mean(spec, count, seed, partial_correlation_unchecked)
}

/// Monte Carlo mean of the draws themselves.
pub fn wishart_sample_mean(spec: &WishartSpec, count: usize, seed: u64) -> Result<SymMatrix> {
    draw_mean(spec, count, seed, SymMatrix::clone)
}

/// Edge iff `|E_h(ρij | Y)| > η`.
pub fn edge_rule_mean(eh: &SymMatrix, eta: f64) -> AdjacencyMatrix {
    AdjacencyMatrix::from_fn(eh.dim(), |i, j| eh.get(i, j).abs() > eta)
}

/// `|ρ̃ij| / max(|E_g(ρij | Y)|, 1e-8)`, the statistic behind the ratio rule.
pub fn ratio_scores(rho_tilde: &SymMatrix, eg: &SymMatrix) -> Result<SymMatrix> {
    rho_tilde.zip_with(eg, |r, g| r.abs() / g.abs().max(RATIO_FLOOR))
}

/// Edge iff `|ρ̃ij| / |E_g(ρij | Y)| > η`.
pub fn edge_rule_ratio(rho_tilde: &SymMatrix, eg: &SymMatrix, eta: f64) -> Result<AdjacencyMatrix> {
    let ratio = ratio_scores(rho_tilde, eg)?;
    Ok(AdjacencyMatrix::from_fn(ratio.dim(), |i, j| ratio.get(i, j) > eta))
}

/// `0.20, 0.22, …, 0.60`.
pub fn default_grid() -> Vec<f64> {
    (0..=20).map(|k| f64::from(20 + 2 * k) / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub grid: Vec<f64>,
    /// `|#edges(estimate) − #edges(truth)|` per threshold.
    pub sparsity_error: Vec<f64>,
    /// MCC per threshold; an undefined MCC counts as 0.
    pub mcc: Vec<f64>,
    pub best_eta: f64,
    pub best_mcc: f64,
}

impl ThresholdReport {
    /// Builds a report from per-threshold values, picking the best MCC with
    /// ties going to the smallest threshold.
    pub fn from_curves(grid: Vec<f64>, sparsity_error: Vec<f64>, mcc: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Empty("threshold grid"));
        }
        if !grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("threshold grid must be strictly increasing".into()));
        }
        if sparsity_error.len() != grid.len() || mcc.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: mcc.len().min(sparsity_error.len()),
            });
        }
        let mut best = 0;
        for k in 1..grid.len() {
            if mcc[k] > mcc[best] {
                best = k;
            }
        }
        Ok(ThresholdReport {
            best_eta: grid[best],
            best_mcc: mcc[best],
            grid,
            sparsity_error,
            mcc,
        })
    }
}

/// Scores `estimate(η)` against `truth` at every grid point.
pub fn threshold_sweep(
    truth: &AdjacencyMatrix,
    mut estimate: impl FnMut(f64) -> AdjacencyMatrix,
    grid: &[f64],
) -> Result<ThresholdReport> {
    let mut sparsity = Vec::with_capacity(grid.len());
    let mut mcc = Vec::with_capacity(grid.len());
    for &eta in grid {
        let est = estimate(eta);
        sparsity.push((est.edge_count() as f64 - truth.edge_count() as f64).abs());
        let scores = classification_scores(&confusion(&est, truth)?);
        mcc.push(scores.mcc.unwrap_or(0.0));
    }
    ThresholdReport::from_curves(grid.to_vec(), sparsity, mcc)
}
