//! D-net comparator: direct estimation of a precision difference by
//! proximal gradient descent on the D-trace loss, with BIC selection over a
//! penalty path.
//!
//! The loss is `½ tr(Δ S₁ Δ S₂) − tr(Δ (S₁ − S₂))` and the penalty is
//! `λ Σij |Δij|` over every entry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::matrix::{eigenvalues_sym, DataMatrix, SymMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IstaConfig {
    pub max_iters: usize,
    /// Stop once the objective drops by less than `tolerance · max(1, |F|)`.
    pub tolerance: f64,
    /// Explicit penalty grid; empty means the default grid built from the data.
    pub grid: Vec<f64>,
    /// Number of points in the default grid.
    pub grid_len: usize,
}

impl Default for IstaConfig {
    fn default() -> Self {
        IstaConfig {
            max_iters: 20_000,
            tolerance: 1e-12,
            grid: Vec::new(),
            grid_len: 20,
        }
    }
}

impl IstaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if let Some(&bad) = self.grid.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!("penalty grid values must be > 0, got {bad}")));
        }
        if self.grid.is_empty() && self.grid_len == 0 {
            return Err(Error::InvalidParameter("grid_len must be >= 1".into()));
        }
        Ok(())
    }
}

/// `count` log-spaced values from `0.01·m` to `m`, with `m = max|S₁ − S₂|`,
/// in increasing order.
pub fn default_penalty_grid(s1: &SymMatrix, s2: &SymMatrix, count: usize) -> Result<Vec<f64>> {
    let top = s1.sub(s2)?.max_abs();
    if !(top > 0.0) {
        return Err(Error::InvalidParameter(
            "the two covariance matrices are identical; no penalty scale".into(),
        ));
    }
    if count == 1 {
        return Ok(vec![top]);
    }
    let (lo, hi) = ((0.01f64).ln(), 0.0f64);
    Ok((0..count)
        .map(|k| top * (lo + (hi - lo) * k as f64 / (count - 1) as f64).exp())
        .collect())
}

fn matmul(a: &[f64], b: &[f64], p: usize) -> Vec<f64> {
    let mut out = vec![0.0; p * p];
    for i in 0..p {
        for k in 0..p {
            let aik = a[i * p + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..p {
                out[i * p + j] += aik * b[k * p + j];
            }
        }
    }
    out
}

fn check_dims(delta: &SymMatrix, s1: &SymMatrix, s2: &SymMatrix) -> Result<()> {
    delta.check_dim(s1.dim())?;
    delta.check_dim(s2.dim())
}

pub fn dnet_loss(delta: &SymMatrix, s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    check_dims(delta, s1, s2)?;
    let p = delta.dim();
    let a = matmul(delta.as_slice(), s1.as_slice(), p);
    let b = matmul(delta.as_slice(), s2.as_slice(), p);
    let mut quad = 0.0;
    let mut lin = 0.0;
    for i in 0..p {
        for j in 0..p {
            quad += a[i * p + j] * b[j * p + i];
            lin += delta.get(i, j) * (s1.get(j, i) - s2.get(j, i));
        }
    }
    Ok(0.5 * quad - lin)
}

/// `½ (S₁ Δ S₂ + S₂ Δ S₁) − (S₁ − S₂)`.
pub fn dnet_gradient(delta: &SymMatrix, s1: &SymMatrix, s2: &SymMatrix) -> Result<SymMatrix> {
    check_dims(delta, s1, s2)?;
    let p = delta.dim();
    let m = matmul(&matmul(s1.as_slice(), delta.as_slice(), p), s2.as_slice(), p);
    // S₂ Δ S₁ is the transpose of S₁ Δ S₂.
    Ok(SymMatrix::from_fn(p, |i, j| {
        0.5 * (m[i * p + j] + m[j * p + i]) - (s1.get(i, j) - s2.get(i, j))
    }))
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    x.signum() * (x.abs() - t).max(0.0)
}

fn l1_norm(m: &SymMatrix) -> f64 {
    m.as_slice().iter().map(|x| x.abs()).sum()
}

/// Penalized objective `L(Δ) + λ Σ |Δij|`.
pub fn penalized_objective(delta: &SymMatrix, s1: &SymMatrix, s2: &SymMatrix, lambda: f64) -> Result<f64> {
    Ok(dnet_loss(delta, s1, s2)? + lambda * l1_norm(delta))
}

/// `λmax(S₁)·λmax(S₂)`, an upper bound on the gradient's Lipschitz constant.
pub fn lipschitz_bound(s1: &SymMatrix, s2: &SymMatrix) -> f64 {
    let top = |m: &SymMatrix| eigenvalues_sym(m).last().copied().unwrap_or(0.0);
    top(s1) * top(s2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IstaOutcome {
    pub delta: SymMatrix,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized objective at the start and after every iteration.
    pub history: Vec<f64>,
}

/// Proximal gradient from the origin.
pub fn ista_solve(s1: &SymMatrix, s2: &SymMatrix, lambda: f64, cfg: &IstaConfig) -> Result<IstaOutcome> {
    ista_solve_from(s1, s2, lambda, cfg, SymMatrix::zeros(s1.dim()))
}

/// Proximal gradient with step `1/L` from a given starting point.
pub fn ista_solve_from(
    s1: &SymMatrix,
    s2: &SymMatrix,
    lambda: f64,
    cfg: &IstaConfig,
    start: SymMatrix,
) -> Result<IstaOutcome> {
    cfg.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    check_dims(&start, s1, s2)?;
    let l = lipschitz_bound(s1, s2);
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "covariance matrices give a degenerate step bound {l}"
        )));
    }
    let step = 1.0 / l;
    let mut delta = start;
    let mut f = penalized_objective(&delta, s1, s2, lambda)?;
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let g = dnet_gradient(&delta, s1, s2)?;
        let next = delta
            .zip_with(&g, |d, gi| soft_threshold(d - step * gi, lambda * step))
            .expect("same dimension");
        let f_next = penalized_objective(&next, s1, s2, lambda)?;
        iterations += 1;
        let drop = f - f_next;
        delta = next;
        f = f_next;
        history.push(f);
        if drop < cfg.tolerance * f.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(IstaOutcome {
        delta,
        objective: f,
        iterations,
        converged,
        history,
    })
}

/// Largest violation of the subgradient optimality conditions at `delta`.
pub fn kkt_residual(delta: &SymMatrix, s1: &SymMatrix, s2: &SymMatrix, lambda: f64) -> Result<f64> {
    let g = dnet_gradient(delta, s1, s2)?;
    let mut worst: f64 = 0.0;
    for (&d, &gi) in delta.as_slice().iter().zip(g.as_slice()) {
        let r = if d != 0.0 {
            (gi + lambda * d.signum()).abs()
        } else {
            (gi.abs() - lambda).max(0.0)
        };
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Upper-triangle nonzeros.
pub fn degrees_of_freedom(delta: &SymMatrix) -> usize {
    let p = delta.dim();
    (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .filter(|&(i, j)| delta.get(i, j) != 0.0)
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub delta: SymMatrix,
    /// Unpenalized loss at the solution.
    pub loss: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub df: usize,
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionPath {
    /// Points in increasing `λ`.
    pub points: Vec<PathPoint>,
    pub selected: usize,
}

impl SolutionPath {
    pub fn selected_point(&self) -> &PathPoint {
        &self.points[self.selected]
    }

    pub fn adjacency(&self) -> AdjacencyMatrix {
        AdjacencyMatrix::support(&self.selected_point().delta, 0.0)
    }
}

/// `(n₁ + n₂)·L(Δ) + log(n₁ + n₂)·df`.
pub fn bic_score(loss: f64, df: usize, n1: usize, n2: usize) -> f64 {
    let n = (n1 + n2) as f64;
    n * loss + n.ln() * df as f64
}

/// Index of the smallest BIC; ties go to the larger penalty. Points must be
/// in increasing `λ`.
pub fn bic_select(points: &[PathPoint]) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::Empty("solution path"));
    }
    let mut best = 0;
    for k in 1..points.len() {
        if points[k].bic <= points[best].bic {
            best = k;
        }
    }
    Ok(best)
}

/// Solves along the grid from the largest penalty down, warm-starting each
/// solve at the previous solution, then selects by BIC.
pub fn solve_path(
    s1: &SymMatrix,
    s2: &SymMatrix,
    n1: usize,
    n2: usize,
    cfg: &IstaConfig,
) -> Result<SolutionPath> {
    cfg.validate()?;
    let mut grid = if cfg.grid.is_empty() {
        default_penalty_grid(s1, s2, cfg.grid_len)?
    } else {
        cfg.grid.clone()
    };
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut points = Vec::with_capacity(grid.len());
    let mut start = SymMatrix::zeros(s1.dim());
    for &lambda in grid.iter().rev() {
        let out = ista_solve_from(s1, s2, lambda, cfg, start)?;
        let loss = dnet_loss(&out.delta, s1, s2)?;
        let df = degrees_of_freedom(&out.delta);
        start = out.delta.clone();
        points.push(PathPoint {
            lambda,
            loss,
            objective: out.objective,
            iterations: out.iterations,
            converged: out.converged,
            df,
            bic: bic_score(loss, df, n1, n2),
            delta: out.delta,
        });
    }
    points.reverse();
    let selected = bic_select(&points)?;
    Ok(SolutionPath { points, selected })
}

/// D-net estimate from two zero-mean samples, using `XᵀX / n` as each
/// covariance.
pub fn estimate_dnet(x1: &DataMatrix, x2: &DataMatrix, cfg: &IstaConfig) -> Result<SolutionPath> {
    if x1.ncols() != x2.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x1.ncols(),
            got: x2.ncols(),
        });
    }
    let (n1, n2) = (x1.nrows(), x2.nrows());
    if n1 == 0 || n2 == 0 {
        return Err(Error::EmptyData);
    }
    let s1 = x1.scatter().scale(1.0 / n1 as f64);
    let s2 = x2.scatter().scale(1.0 / n2 as f64);
    solve_path(&s1, &s2, n1, n2, cfg)
}
